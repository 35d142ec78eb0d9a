#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tdiv/artifact_synth.hpp"
#include "tdiv/video_io.hpp"
#include "tdiv_cli.hpp"

using namespace tdiv;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  json j() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = tdiv::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"metrics"}).code, 2);
  EXPECT_EQ(run({"metrics", "-i", "/nonexistent/clip.fvr"}).code, 2);
  EXPECT_EQ(run({"metrics", "-i", "x.fvr", "--metric", "t-foo"}).code, 2);
}

TEST(Cli, MetricsOnConstantAndFrozenClips) {
  tdiv::test::TempDir dir;
  const FrameSequence flat(std::vector<Frame>(4, Frame::filled({16, 16, 1}, 0.5f)));
  save_raw_fvr(flat, dir / "flat.fvr");
  const auto r = run({"metrics", "-i", (dir / "flat.fvr").string(), "--metric", "t-dssim"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.j()["frames"], 4);
  EXPECT_EQ(r.j()["reports"][0]["aggregate"], 0.0);

  save_png_dir(synthesize(tdiv::test::moving_shapes(4, 16, 16), ArtifactMode::freezing), dir / "frozen");
  const auto f = run({"metrics", "-i", (dir / "frozen").string(), "--curve-out", (dir / "c.csv").string()});
  ASSERT_EQ(f.code, 0) << f.err;
  const auto reports = f.j()["reports"];
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0]["metric"], "t-psnr");
  EXPECT_EQ(reports[0]["aggregate"], "inf");
  EXPECT_TRUE(std::filesystem::exists(dir / "c.t-psnr.csv"));
  EXPECT_EQ(slurp(dir / "c.t-dssim.csv").substr(0, 8), "t,value\n");
}

TEST(Cli, SynthAndHeatmap) {
  tdiv::test::TempDir dir;
  save_raw_fvr(tdiv::test::moving_shapes(5, 16, 16), dir / "in.fvr");
  const auto s = run({"synth", "-i", (dir / "in.fvr").string(), "--mode", "looping-bwd", "-o", (dir / "out.fvr").string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.j()["frames_out"], 10);
  EXPECT_EQ(load_raw_fvr(dir / "out.fvr").size(), 10u);

  const auto n = run({"synth", "-i", (dir / "in.fvr").string(), "--mode", "noise", "--sigma2", "0.01", "--seed", "3",
                      "-o", (dir / "noisy").string(), "--out-format", "png"});
  ASSERT_EQ(n.code, 0) << n.err;
  EXPECT_EQ(load_png_dir(dir / "noisy").size(), 5u);

  const auto h = run({"heatmap", "-i", (dir / "out.fvr").string(), "--out-csv", (dir / "m.csv").string(),
                      "--out-image", (dir / "m.pgm").string()});
  ASSERT_EQ(h.code, 0) << h.err;
  EXPECT_EQ(h.j()["frames"], 10);
  EXPECT_EQ(slurp(dir / "m.pgm").substr(0, 10), "P5\n10 10\n2");
  EXPECT_EQ(run({"heatmap", "-i", (dir / "out.fvr").string()}).code, 2);

  save_raw_fvr(FrameSequence(std::vector<Frame>(3, Frame::filled({12, 12, 1}, 0.7f))), dir / "flat.fvr");
  ASSERT_EQ(run({"heatmap", "-i", (dir / "flat.fvr").string(), "--out-csv", (dir / "z.csv").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "z.csv"), "0,0,0\n0,0,0\n0,0,0\n");
  EXPECT_EQ(run({"synth", "-i", (dir / "missing.fvr").string(), "--mode", "freezing", "-o", (dir / "x.fvr").string()}).code,
            2);
}

TEST(Cli, MdpCommands) {
  tdiv::test::TempDir dir;
  write_text(dir / "r.json", R"({"rewards": [1, 1, 1]})");
  write_text(dir / "q.json", R"([1, 2, 3])");
  const auto t = run({"mdp", "q-targets", "--rewards", (dir / "r.json").string(), "--gamma", "0.5"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto q = t.j()["q_targets"];
  EXPECT_NEAR(q[0].get<double>(), 0.5833333333333334, 1e-12);
  EXPECT_EQ(q[2].get<double>(), 1.0);

  const auto l = run({"mdp", "losses", "--rewards", (dir / "r.json").string(), "--q", (dir / "q.json").string(),
                      "--rewards-real", (dir / "r.json").string(), "--q-real", (dir / "q.json").string(), "--beta", "0"});
  ASSERT_EQ(l.code, 0) << l.err;
  EXPECT_EQ(l.j()["l_t"], 0.0);
  EXPECT_EQ(l.j()["l_q_real"], l.j()["l_q_fake"]);

  const auto b = run({"mdp", "bellman", "--rewards", (dir / "r.json").string(), "--q", (dir / "q.json").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(b.j()["residuals"].size(), 3u);

  write_text(dir / "bad.json", R"({"rewards": [1, "x"]})");
  EXPECT_EQ(run({"mdp", "q-targets", "--rewards", (dir / "bad.json").string()}).code, 2);
  EXPECT_EQ(run({"mdp", "q-targets", "--rewards", (dir / "r.json").string(), "--gamma", "1"}).code, 2);
}

TEST(Cli, TcnCommands) {
  tdiv::test::TempDir dir;
  const auto rf = run({"tcn", "receptive-field"});
  ASSERT_EQ(rf.code, 0) << rf.err;
  EXPECT_EQ(rf.j()["total_frames"], 15);

  const auto init = run({"tcn", "init", "--height", "16", "--width", "16", "--seed", "4", "-o",
                         (dir / "m.json").string(), "--storage", "sidecar"});
  ASSERT_EQ(init.code, 0) << init.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "m.json.bin"));

  const std::vector<std::string> fwd{"tcn", "forward", "--model", (dir / "m.json").string(), "--frames", "6"};
  auto a_args = fwd;
  a_args.insert(a_args.begin(), {"--threads", "1"});
  auto b_args = fwd;
  b_args.insert(b_args.begin(), {"--threads", "3"});
  const auto a = run(a_args);
  const auto b = run(b_args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.j()["rewards"].size(), 6u);

  const auto c = run({"tcn", "check-causality", "--model", (dir / "m.json").string(), "--trials", "10"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.j()["causal"], true);
  const auto s = run({"tcn", "check-causality", "--height", "16", "--width", "16", "--trials", "10", "--symmetric"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.j()["causal"], false);

  save_raw_fvr(tdiv::test::random_sequence(3, {8, 8, 3}, 1), dir / "small.fvr");
  EXPECT_EQ(run({"tcn", "forward", "--model", (dir / "m.json").string(), "-i", (dir / "small.fvr").string()}).code, 2);
}

TEST(Cli, Preprocess) {
  tdiv::test::TempDir dir;
  save_raw_fvr(tdiv::test::moving_shapes(2, 64, 64, 3), dir / "in.fvr");
  const auto r = run({"preprocess", "--algo", "A", "--mean", "0.4,0.4,0.4", "--std", "0.2,0.2,0.2", "-i",
                      (dir / "in.fvr").string(), "-o", (dir / "out.fvr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.j()["crop_offset"], json::array({8, 8}));
  const auto t = load_raw_fvr_tensor(dir / "out.fvr");
  EXPECT_EQ(t.shape, (FrameShape{112, 112, 3}));
  EXPECT_EQ(run({"preprocess", "--algo", "B", "--mean", "0.4", "--std", "0.2", "-i", (dir / "in.fvr").string(), "-o",
                 (dir / "o2.fvr").string()})
                .code,
            2);
}
