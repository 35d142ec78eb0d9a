#pragma once

// The `tdiv` command line. Kept in a header so tests can drive it in-process
// through run().

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdiv/tdiv.hpp"

namespace tdiv::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2 };

struct Globals {
  unsigned threads = 0;
  bool pretty = false;
};

inline std::string dump(const json& j, const Globals& g) { return j.dump(g.pretty ? 2 : -1) + "\n"; }

inline void write_text(const fs::path& path, const std::string& text) {
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

// JSON goes to `out_path` when given, otherwise to the output stream.
inline void emit(const json& j, const std::string& out_path, const Globals& g, std::ostream& out) {
  if (out_path.empty())
    out << dump(j, g);
  else
    write_text(out_path, dump(j, g));
}

inline SequenceFormat resolve_format(const std::string& name, const fs::path& path) {
  if (name == "png") return SequenceFormat::png_dir;
  if (name == "fvr") return SequenceFormat::raw_fvr;
  return detect_format(path);
}

inline SequenceFormat resolve_output_format(const std::string& name, const fs::path& path) {
  if (name == "png") return SequenceFormat::png_dir;
  if (name == "fvr") return SequenceFormat::raw_fvr;
  return path.extension() == ".fvr" ? SequenceFormat::raw_fvr : SequenceFormat::png_dir;
}

inline FrameSequence load_input(const std::string& path, const std::string& format) {
  if (!fs::exists(path)) throw InputError("input not found: " + path);
  return load_sequence(path, resolve_format(format, path));
}

inline json read_json_file(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + " is not valid JSON: " + e.what());
  }
}

// Reads {"<key>": [numbers]} from a trace file. A bare array is accepted too.
inline std::vector<double> read_trace(const fs::path& path, const char* key) {
  const json j = read_json_file(path);
  const json* values = &j;
  if (j.is_object()) {
    if (!j.contains(key)) throw InputError(path.string() + ": missing \"" + key + "\" array");
    values = &j[key];
  }
  if (!values->is_array() || values->empty()) throw InputError(path.string() + ": trace must be a non-empty array");
  std::vector<double> out;
  for (const json& v : *values) {
    if (!v.is_number()) throw InputError(path.string() + ": trace entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InputError(std::string("cannot parse ") + what + " entry \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(std::string(what) + " list is empty");
  return out;
}

// Seeded uniform-noise clip, used when a TCN command gets no --input.
inline FrameSequence random_clip(std::size_t frames, const FrameShape& shape, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Frame> out;
  for (std::size_t k = 0; k < frames; ++k) {
    std::vector<float> data(shape.elements());
    for (float& v : data) v = static_cast<float>(rng.uniform());
    out.emplace_back(shape, std::move(data));
  }
  return FrameSequence(std::move(out));
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string input;
  std::string format = "auto";
  std::vector<std::string> metrics;
  std::string color = "luma";
  std::size_t window = 11;
  double sigma = 1.5;
  std::string curve_out;
  std::string out;
};

inline fs::path curve_path(const std::string& base, const std::string& metric, bool several) {
  if (!several) return base;
  fs::path p(base);
  return p.parent_path() / (p.stem().string() + "." + metric + p.extension().string());
}

inline void cmd_metrics(const MetricsArgs& a, const Globals& g, std::ostream& out) {
  const FrameSequence seq = load_input(a.input, a.format);
  std::vector<std::string> metrics = a.metrics.empty() ? std::vector<std::string>{"t-psnr", "t-dssim"} : a.metrics;
  DiversityOptions options;
  options.threads = g.threads;
  options.color = a.color == "per-channel" ? ColorMode::per_channel_mean : ColorMode::luma;
  SsimParams params;
  params.window_size = a.window;
  params.window_sigma = a.sigma;
  json reports = json::array();
  for (const std::string& m : metrics) {
    const DiversityReport r = m == "t-psnr" ? t_psnr(seq, options) : t_dssim(seq, params, options);
    reports.push_back(to_json(r));
    if (!a.curve_out.empty())
      write_text(curve_path(a.curve_out, m, metrics.size() > 1), curve_csv(per_timestep_curve(r)));
  }
  emit({{"frames", seq.size()}, {"reports", reports}}, a.out, g, out);
}

struct SynthArgs {
  std::string input;
  std::string format = "auto";
  std::string mode;
  double sigma2 = 0.03;
  double mean = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string out_format = "auto";
};

inline void cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
  const FrameSequence base = load_input(a.input, a.format);
  FrameSequence result;
  if (a.mode == "noise") {
    result = add_noise(base, NoiseSpec{a.mean, a.sigma2, a.seed}, g.threads);
  } else {
    const ArtifactMode mode = a.mode == "looping-fwd"   ? ArtifactMode::looping_fwd
                              : a.mode == "looping-bwd" ? ArtifactMode::looping_bwd
                                                        : ArtifactMode::freezing;
    result = synthesize(base, mode);
  }
  const SequenceFormat fmt = resolve_output_format(a.out_format, a.out);
  save_sequence(result, a.out, fmt);
  json summary{{"mode", a.mode},
               {"frames_in", base.size()},
               {"frames_out", result.size()},
               {"format", fmt == SequenceFormat::png_dir ? "png" : "fvr"}};
  if (a.mode == "noise") summary["noise"] = {{"mean", a.mean}, {"sigma2", a.sigma2}, {"seed", a.seed}};
  out << dump(summary, g);
}

struct HeatmapArgs {
  std::string input;
  std::string format = "auto";
  std::string distance = "l1";
  std::string out_csv;
  std::string out_image;
};

inline void cmd_heatmap(const HeatmapArgs& a, const Globals& g, std::ostream& out) {
  const FrameSequence seq = load_input(a.input, a.format);
  DistanceMatrix m;
  if (a.distance == "mse") {
    m = distance_matrix(seq, [](const Frame& x, const Frame& y) { return mse(x, y); }, g.threads);
  } else if (a.distance == "dssim") {
    const SsimParams p;
    std::vector<SsimFrameStats> stats(seq.size());
    parallel_for(0, seq.size(), g.threads, [&](std::size_t k) { stats[k] = ssim_stats(seq[k], p); });
    m = DistanceMatrix(seq.size());
    parallel_for(1, seq.size(), g.threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < i; ++j)
        m.set(i, j, std::max(0.0, 0.5 * (1.0 - ssim(seq[i], stats[i], seq[j], stats[j], p))));
    });
  } else {
    m = distance_matrix(seq, g.threads);
  }
  write_text(a.out_csv, matrix_csv(m));
  if (!a.out_image.empty()) detail::write_file(a.out_image, matrix_pgm(m));
  out << dump({{"frames", seq.size()}, {"distance", a.distance}, {"max", json_number(m.max())}}, g);
}

struct MdpArgs {
  std::string rewards;
  std::string q;
  std::string rewards_real;
  std::string q_real;
  double gamma = 0.9;
  double beta = 0.7;
  double l_i = 0.0;
  double l_v = 0.0;
  double l_i_fake = 0.0;
  double l_v_fake = 0.0;
  std::string out;
};

inline void cmd_q_targets(const MdpArgs& a, const Globals& g, std::ostream& out) {
  const RewardTrace r(read_trace(a.rewards, "rewards"));
  const QTrace t = q_targets(r, a.gamma);
  emit({{"gamma", a.gamma}, {"q_targets", json_numbers(t.values())}}, a.out, g, out);
}

inline void cmd_losses(const MdpArgs& a, const Globals& g, std::ostream& out) {
  const RewardTrace r_fake(read_trace(a.rewards, "rewards"));
  const QTrace q_fake(read_trace(a.q, "q"));
  const RewardTrace r_real(read_trace(a.rewards_real, "rewards"));
  const QTrace q_real(read_trace(a.q_real, "q"));
  const QLoss lq_real = l_q(q_real, r_real, a.gamma);
  const QLoss lq_fake = l_q(q_fake, r_fake, a.gamma);
  const double lt = l_t(q_fake, a.beta);
  json j{{"gamma", a.gamma},
         {"beta", a.beta},
         {"l_q_real", json_number(lq_real.mean)},
         {"l_q_fake", json_number(lq_fake.mean)},
         {"l_q_real_per_step", json_numbers(lq_real.per_step)},
         {"l_q_fake_per_step", json_numbers(lq_fake.per_step)},
         {"l_t", json_number(lt)},
         {"discriminator_loss", json_number(assemble_discriminator_loss(a.l_i, a.l_v, lq_real.mean, lq_fake.mean))},
         {"generator_loss", json_number(assemble_generator_loss(a.l_i_fake, a.l_v_fake, q_fake, a.beta))}};
  emit(j, a.out, g, out);
}

inline void cmd_bellman(const MdpArgs& a, const Globals& g, std::ostream& out) {
  const RewardTrace r(read_trace(a.rewards, "rewards"));
  const QTrace q(read_trace(a.q, "q"));
  const auto res = bellman_residual(q, r, a.gamma);
  double worst = 0.0;
  for (double v : res) worst = std::max(worst, std::abs(v));
  emit({{"gamma", a.gamma}, {"residuals", json_numbers(res)}, {"max_abs", json_number(worst)}}, a.out, g, out);
}

struct TcnArgs {
  std::uint64_t seed = 0;
  std::string model;
  std::string input;
  std::string format = "auto";
  std::string storage = "inline";
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t frames = 16;
  std::size_t trials = 1000;
  std::uint64_t trial_seed = 1;
  bool symmetric = false;
  std::string out;
};

inline TcnModel model_from(const TcnArgs& a) {
  if (!a.model.empty()) return load_model(a.model);
  return init_model(default_config(a.channels, a.height, a.width), a.seed);
}

inline FrameSequence clip_from(const TcnArgs& a, const TcnModel& m) {
  if (!a.input.empty()) return load_input(a.input, a.format);
  return random_clip(a.frames, {m.input_height, m.input_width, m.input_channels}, a.trial_seed);
}

inline json receptive_json(const TcnConfig& c) {
  const ReceptiveFieldReport r = receptive_field(c);
  json trace = json::array();
  for (const auto& [h, w] : spatial_trace(c)) trace.push_back({h, w});
  return {{"per_layer", r.per_layer}, {"total_frames", r.total_frames}, {"spatial_trace", trace}};
}

inline void cmd_tcn_init(const TcnArgs& a, const Globals& g, std::ostream& out) {
  const TcnModel m = init_model(default_config(a.channels, a.height, a.width), a.seed);
  save_model(m, a.out, a.storage == "sidecar" ? TensorStorage::sidecar : TensorStorage::inline_json);
  json j = receptive_json(m.config());
  j["seed"] = a.seed;
  j["parameters"] = m.parameter_count();
  out << dump(j, g);
}

inline void cmd_tcn_forward(const TcnArgs& a, const Globals& g, std::ostream& out) {
  const TcnModel m = model_from(a);
  const FrameSequence seq = clip_from(a, m);
  const TcnOutput o = forward(m, seq, g.threads);
  emit({{"frames", seq.size()}, {"rewards", json_numbers(o.rewards.values())}, {"q", json_numbers(o.q.values())}},
       a.out, g, out);
}

inline void cmd_tcn_causality(const TcnArgs& a, const Globals& g, std::ostream& out) {
  TcnModel m = model_from(a);
  if (a.symmetric) {
    for (auto& l : m.trunk) l.config.temporal_padding = TemporalPadding::symmetric;
  }
  const FrameSequence seq = clip_from(a, m);
  const CausalityReport r = check_causality(m, seq, a.trials, a.trial_seed, g.threads);
  json details = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(r.violations.size(), 32); ++i) {
    const auto& v = r.violations[i];
    details.push_back({{"trial", v.trial},
                       {"cutoff", v.cutoff},
                       {"perturbed_frame", v.perturbed_frame},
                       {"output_index", v.output_index},
                       {"head", v.head}});
  }
  emit({{"trials", r.trials},
        {"frames", seq.size()},
        {"padding", a.symmetric ? "symmetric" : "causal"},
        {"violations", r.violations.size()},
        {"causal", r.causal()},
        {"first_violations", details}},
       a.out, g, out);
}

inline void cmd_tcn_receptive(const TcnArgs& a, const Globals& g, std::ostream& out) {
  const TcnConfig c = a.model.empty() ? default_config(a.channels, a.height, a.width) : load_model(a.model).config();
  emit(receptive_json(c), a.out, g, out);
}

struct PreprocessArgs {
  std::string algo;
  std::string mean;
  std::string std;
  std::string input;
  std::string format = "auto";
  std::string out;
};

inline void cmd_preprocess(const PreprocessArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const FrameSequence seq = load_input(a.input, a.format);
  const NormStats stats{parse_list(a.mean, "--mean"), parse_list(a.std, "--std")};
  const PipelineResult r = run_pipeline(seq, a.algo == "A" ? PipelineAlgo::A : PipelineAlgo::B, stats, g.threads);
  for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
  save_raw_fvr(r.tensor, a.out);
  json crop = r.crop ? json::array({r.crop->y, r.crop->x}) : json(nullptr);
  out << dump({{"algo", a.algo},
               {"frames", r.tensor.frames},
               {"height", r.tensor.shape.height},
               {"width", r.tensor.shape.width},
               {"channels", r.tensor.shape.channels},
               {"crop_offset", crop},
               {"warnings", r.warnings}},
              g);
}

// ---------------------------------------------------------------------------

inline void add_input(CLI::App* cmd, std::string& input, std::string& format) {
  cmd->add_option("-i,--input", input, "PNG frame directory or .fvr file")->required();
  cmd->add_option("--format", format, "Input format")
      ->check(CLI::IsMember({"auto", "png", "fvr"}))
      ->capture_default_str();
}

// Runs one command line (without the program name). Returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal-diversity metrics, artifact synthesis and causal TCN tools", "tdiv"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0: TDIV_THREADS or all cores)");
  app.add_flag("--pretty", g.pretty, "Indent JSON output");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Temporal-diversity report (t-PSNR, t-DSSIM)");
  add_input(m, metrics.input, metrics.format);
  m->add_option("--metric", metrics.metrics, "t-psnr and/or t-dssim (default: both)")
      ->check(CLI::IsMember({"t-psnr", "t-dssim"}));
  m->add_option("--color", metrics.color, "How RGB frames are compared")
      ->check(CLI::IsMember({"luma", "per-channel"}))
      ->capture_default_str();
  m->add_option("--ssim-window", metrics.window, "SSIM Gaussian window size")->capture_default_str();
  m->add_option("--ssim-sigma", metrics.sigma, "SSIM Gaussian window sigma")->capture_default_str();
  m->add_option("--curve-out", metrics.curve_out, "Per-timestep CSV (t,value)");
  m->add_option("-o,--out", metrics.out, "Write JSON here instead of stdout");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Looping, freezing or noise artifacts");
  add_input(s, synth.input, synth.format);
  s->add_option("--mode", synth.mode)
      ->required()
      ->check(CLI::IsMember({"looping-fwd", "looping-bwd", "freezing", "noise"}));
  s->add_option("--sigma2", synth.sigma2, "Noise variance")->capture_default_str();
  s->add_option("--mean", synth.mean, "Noise mean")->capture_default_str();
  s->add_option("--seed", synth.seed, "Noise seed")->capture_default_str();
  s->add_option("-o,--out", synth.out, "Output PNG directory or .fvr file")->required();
  s->add_option("--out-format", synth.out_format)
      ->check(CLI::IsMember({"auto", "png", "fvr"}))
      ->capture_default_str();

  HeatmapArgs heat;
  auto* h = app.add_subcommand("heatmap", "Pairwise frame-distance matrix");
  add_input(h, heat.input, heat.format);
  h->add_option("--distance", heat.distance)->check(CLI::IsMember({"l1", "mse", "dssim"}))->capture_default_str();
  h->add_option("--out-csv", heat.out_csv, "N x N CSV")->required();
  h->add_option("--out-image", heat.out_image, "Lower-triangle heatmap as binary PGM");

  MdpArgs mdp;
  auto* md = app.add_subcommand("mdp", "Q-targets, losses and Bellman residuals");
  md->require_subcommand(1);
  auto add_gamma = [&](CLI::App* c) {
    c->add_option("--gamma", mdp.gamma, "Discount factor")->capture_default_str();
    c->add_option("-o,--out", mdp.out, "Write JSON here instead of stdout");
  };
  auto* qt = md->add_subcommand("q-targets", "Averaged discounted Q-targets");
  qt->add_option("--rewards", mdp.rewards, "Trace file {\"rewards\": [...]}")->required();
  add_gamma(qt);
  auto* lo = md->add_subcommand("losses", "Q losses and assembled objectives");
  lo->add_option("--rewards", mdp.rewards, "Rewards on generated windows")->required();
  lo->add_option("--q", mdp.q, "Q-values on generated windows")->required();
  lo->add_option("--rewards-real", mdp.rewards_real, "Rewards on real windows")->required();
  lo->add_option("--q-real", mdp.q_real, "Q-values on real windows")->required();
  lo->add_option("--beta", mdp.beta, "Generator Q weighting")->capture_default_str();
  lo->add_option("--l-i", mdp.l_i, "Image discriminator loss")->capture_default_str();
  lo->add_option("--l-v", mdp.l_v, "Video discriminator loss")->capture_default_str();
  lo->add_option("--l-i-fake", mdp.l_i_fake, "Image score on generated frames")->capture_default_str();
  lo->add_option("--l-v-fake", mdp.l_v_fake, "Video score on generated clips")->capture_default_str();
  add_gamma(lo);
  auto* be = md->add_subcommand("bellman", "Bellman consistency residuals");
  be->add_option("--rewards", mdp.rewards)->required();
  be->add_option("--q", mdp.q)->required();
  add_gamma(be);

  TcnArgs tcn;
  auto* tc = app.add_subcommand("tcn", "Causal video discriminator");
  tc->require_subcommand(1);
  auto add_geometry = [&](CLI::App* c) {
    c->add_option("--seed", tcn.seed, "Weight seed")->capture_default_str();
    c->add_option("--channels", tcn.channels)->capture_default_str();
    c->add_option("--height", tcn.height)->capture_default_str();
    c->add_option("--width", tcn.width)->capture_default_str();
  };
  auto add_clip = [&](CLI::App* c) {
    c->add_option("--model", tcn.model, "Model JSON (default: seeded default architecture)");
    c->add_option("-i,--input", tcn.input, "Input clip (default: seeded random clip)");
    c->add_option("--format", tcn.format)->check(CLI::IsMember({"auto", "png", "fvr"}))->capture_default_str();
    c->add_option("--frames", tcn.frames, "Random clip length")->capture_default_str();
    c->add_option("--clip-seed", tcn.trial_seed, "Seed for the random clip and trials")->capture_default_str();
    c->add_option("-o,--out", tcn.out, "Write JSON here instead of stdout");
    add_geometry(c);
  };
  auto* ti = tc->add_subcommand("init", "Write a seeded random model");
  add_geometry(ti);
  ti->add_option("-o,--out", tcn.out, "Model JSON path")->required();
  ti->add_option("--storage", tcn.storage, "Tensor storage")
      ->check(CLI::IsMember({"inline", "sidecar"}))
      ->capture_default_str();
  auto* tf = tc->add_subcommand("forward", "Reward and Q traces");
  add_clip(tf);
  auto* tk = tc->add_subcommand("check-causality", "Randomized prefix-perturbation check");
  add_clip(tk);
  tk->add_option("--trials", tcn.trials)->capture_default_str();
  tk->add_flag("--symmetric", tcn.symmetric, "Use symmetric temporal padding (negative control)");
  auto* tr = tc->add_subcommand("receptive-field", "Temporal receptive field");
  tr->add_option("--model", tcn.model, "Model JSON (default: default architecture)");
  tr->add_option("-o,--out", tcn.out, "Write JSON here instead of stdout");

  PreprocessArgs pre;
  auto* pp = app.add_subcommand("preprocess", "Classifier-input pipelines");
  pp->add_option("--algo", pre.algo)->required()->check(CLI::IsMember({"A", "B"}));
  pp->add_option("--mean", pre.mean, "Per-channel means, comma separated")->required();
  pp->add_option("--std", pre.std, "Per-channel standard deviations, comma separated")->required();
  add_input(pp, pre.input, pre.format);
  pp->add_option("-o,--out", pre.out, "Output .fvr tensor")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "tdiv: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*m) cmd_metrics(metrics, g, out);
    else if (*s) cmd_synth(synth, g, out);
    else if (*h) cmd_heatmap(heat, g, out);
    else if (*qt) cmd_q_targets(mdp, g, out);
    else if (*lo) cmd_losses(mdp, g, out);
    else if (*be) cmd_bellman(mdp, g, out);
    else if (*ti) cmd_tcn_init(tcn, g, out);
    else if (*tf) cmd_tcn_forward(tcn, g, out);
    else if (*tk) cmd_tcn_causality(tcn, g, out);
    else if (*tr) cmd_tcn_receptive(tcn, g, out);
    else if (*pp) cmd_preprocess(pre, g, out, err);
  } catch (const InputError& e) {
    err << "tdiv: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "tdiv: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "tdiv: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace tdiv::cli
