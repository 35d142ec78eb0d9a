#pragma once

// Reusable float buffers for the convolution engine. Large buffers are
// recycled between forward passes instead of being returned to the OS.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

#if defined(__linux__)
#include <sys/mman.h>
#endif

namespace tdiv::detail {

struct FreeDeleter {
  void operator()(float* p) const { std::free(p); }
};

// Blocks of 2 MiB or more are huge-page aligned: the convolution scatters
// rows across many planes and otherwise spends its time on TLB misses.
inline std::unique_ptr<float[], FreeDeleter> allocate_floats(std::size_t count) {
  constexpr std::size_t kHuge = std::size_t{2} << 20;
  const std::size_t bytes = std::max<std::size_t>(count, 1) * sizeof(float);
  const std::size_t align = bytes >= kHuge ? kHuge : 64;
  const std::size_t rounded = (bytes + align - 1) / align * align;
  void* p = std::aligned_alloc(align, rounded);
  if (!p) throw std::bad_alloc();
#if defined(__linux__) && defined(MADV_HUGEPAGE)
  if (align == kHuge) ::madvise(p, rounded, MADV_HUGEPAGE);
#endif
  return std::unique_ptr<float[], FreeDeleter>(static_cast<float*>(p));
}

class ScratchPool {
  struct Block {
    std::unique_ptr<float[], FreeDeleter> data;
    std::size_t capacity = 0;
  };

 public:
  // Uninitialized storage for at least `size` floats, handed back to the
  // pool on destruction.
  class Lease {
   public:
    Lease() = default;
    Lease(ScratchPool* pool, Block block, std::size_t size) : pool_(pool), block_(std::move(block)), size_(size) {}
    Lease(Lease&& other) noexcept { *this = std::move(other); }
    Lease& operator=(Lease&& other) noexcept {
      if (this != &other) {
        release();
        pool_ = std::exchange(other.pool_, nullptr);
        block_ = std::exchange(other.block_, {});
        size_ = std::exchange(other.size_, 0);
      }
      return *this;
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    ~Lease() { release(); }

    float* data() { return block_.data.get(); }
    const float* data() const { return block_.data.get(); }
    float& operator[](std::size_t i) { return block_.data[i]; }
    const float& operator[](std::size_t i) const { return block_.data[i]; }
    std::size_t size() const { return size_; }

   private:
    void release() {
      if (pool_ && block_.data) pool_->give_back(std::move(block_));
      pool_ = nullptr;
    }

    ScratchPool* pool_ = nullptr;
    Block block_;
    std::size_t size_ = 0;
  };

  Lease acquire(std::size_t size) {
    Block block;
    {
      std::lock_guard lock(mutex_);
      // Smallest block that fits; a miss allocates, so the pool settles on
      // one block per live buffer of a repeating request pattern.
      auto best = free_.end();
      for (auto it = free_.begin(); it != free_.end(); ++it) {
        if (it->capacity >= size && (best == free_.end() || it->capacity < best->capacity)) best = it;
      }
      if (best != free_.end()) {
        block = std::move(*best);
        free_.erase(best);
      }
    }
    if (block.capacity < size) {
      block.data = allocate_floats(size);
      block.capacity = size;
    }
    return Lease(this, std::move(block), size);
  }

 private:
  void give_back(Block block) {
    std::lock_guard lock(mutex_);
    free_.push_back(std::move(block));
  }

  std::mutex mutex_;
  std::vector<Block> free_;
};

}  // namespace tdiv::detail
