// cape: continuous augmented positional embeddings, from the command line.
//
// Subcommands: embed (deterministic embeddings), augment (randomized
// position pipeline plus embeddings), viz (per-component PGM dumps),
// check (invariant suite), bench (attention timing CSV), plan
// (padding-free batch planner).
//
// Exit codes: 0 success, 1 invariant failure, 2 usage error. Seeds resolve
// as --seed flag, then CAPE_SEED environment variable, then the config (or
// 42 where no config is involved).

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cape/attention.hpp"
#include "cape/augmentation.hpp"
#include "cape/batching.hpp"
#include "cape/bench.hpp"
#include "cape/checks.hpp"
#include "cape/embedding.hpp"
#include "cape/io.hpp"
#include "cape/positions.hpp"
#include "cape/rng.hpp"

namespace {

std::uint64_t parse_seed_text(const std::string& text) {
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw std::invalid_argument("cannot parse seed: '" + text + "'");
  }
  return v;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CAPE_SEED")) return parse_seed_text(env);
  return fallback;
}

cape::Layout parse_layout(const std::string& name) {
  if (name == "concatenated") return cape::Layout::concatenated;
  if (name == "interleaved") return cape::Layout::interleaved;
  throw std::invalid_argument("unknown layout: '" + name + "'");
}

// Flattens a batch of 1D positions into one embedding, one token row per
// position, batch-major.
cape::Embedding<double> embed_rows(const cape::PositionSet1D<double>& positions,
                                   const cape::FrequencySpec<double>& spec) {
  Eigen::VectorXd flat(positions.size());
  Eigen::Index t = 0;
  for (Eigen::Index b = 0; b < positions.rows(); ++b) {
    for (Eigen::Index c = 0; c < positions.cols(); ++c, ++t) flat[t] = positions(b, c);
  }
  return cape::embed_1d(flat, spec);
}

struct GenerationFlags {
  std::string modality;
  cape::Index dim = 0;
  cape::Index length = 0;    // text
  cape::Index grid = 0;      // image (patches per side)
  cape::Index frames = 0;    // audio
  double hop = 0.0;          // audio
  double offset = 0.0;       // audio
  bool approx_image = false;
};

void add_generation_flags(CLI::App* cmd, GenerationFlags& gen, bool require_modality) {
  auto* modality = cmd->add_option("--modality", gen.modality, "text, image, or audio")
                       ->check(CLI::IsMember({"text", "image", "audio"}));
  if (require_modality) modality->required();
  cmd->add_option("--dim", gen.dim, "embedding width K (even)")->required();
  cmd->add_option("--length", gen.length, "token count (text)");
  cmd->add_option("--grid", gen.grid, "patches per side (image)");
  cmd->add_option("--frames", gen.frames, "frame count (audio)");
  cmd->add_option("--hop", gen.hop, "hop distance in seconds (audio)");
  cmd->add_option("--offset", gen.offset, "first-frame timestamp in seconds (audio)");
  cmd->add_flag("--approx-image-freqs", gen.approx_image,
                "use the evenly spaced magnitude ladder for image frequencies");
}

void reject_flag(bool given, const std::string& flag, const std::string& modality) {
  if (given) {
    throw std::invalid_argument(flag + " does not apply to --modality " + modality);
  }
}

// Positions for `embed` and for generated-position `augment` runs.
cape::PositionSet1D<double> generate_1d(const GenerationFlags& gen) {
  if (gen.modality == "text") {
    reject_flag(gen.grid != 0, "--grid", gen.modality);
    reject_flag(gen.frames != 0, "--frames", gen.modality);
    reject_flag(gen.hop != 0.0, "--hop", gen.modality);
    if (gen.length < 1) throw std::invalid_argument("--length is required for text");
    return cape::text_positions(gen.length).transpose();
  }
  reject_flag(gen.length != 0, "--length", gen.modality);
  reject_flag(gen.grid != 0, "--grid", gen.modality);
  if (gen.frames < 1 || !(gen.hop > 0.0)) {
    throw std::invalid_argument("--frames and --hop are required for audio");
  }
  return cape::audio_positions(gen.frames, gen.hop, gen.offset).transpose();
}

int run_embed(const GenerationFlags& gen, const std::string& layout_name,
              const std::string& out_path) {
  const cape::Layout layout = parse_layout(layout_name);
  cape::Embedding<double> emb;
  cape::Modality modality;
  if (gen.modality == "image") {
    reject_flag(gen.length != 0, "--length", gen.modality);
    reject_flag(gen.frames != 0, "--frames", gen.modality);
    reject_flag(gen.hop != 0.0, "--hop", gen.modality);
    if (gen.grid < 1) throw std::invalid_argument("--grid is required for image");
    modality = cape::Modality::image;
    emb = cape::embed_2d(cape::image_positions(gen.grid, gen.grid),
                         cape::image_spec<double>(gen.dim, gen.approx_image));
  } else if (gen.modality == "text") {
    modality = cape::Modality::text;
    emb = embed_rows(generate_1d(gen), cape::text_spec<double>(gen.dim));
  } else {
    modality = cape::Modality::audio;
    emb = embed_rows(generate_1d(gen), cape::audio_spec<double>(gen.dim));
  }
  cape::save_embedding(out_path, cape::to_layout(emb, layout), modality);
  return 0;
}

int run_augment(const GenerationFlags& gen, const std::string& config_path,
                const std::optional<std::uint64_t>& seed_flag, const std::string& positions_path,
                cape::Index batch, const std::string& out_positions,
                const std::string& out_embedding) {
  cape::AugmentationConfig cfg = cape::augmentation_config_from_json(
      cape::read_text_file(config_path));
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  cape::RngStream rng(cfg.seed);

  if (gen.modality == "image") {
    if (!positions_path.empty()) {
      throw std::invalid_argument(
          "--positions cannot be combined with --modality image; augmentation rebuilds the "
          "canonical grid from --grid");
    }
    if (gen.grid < 1) throw std::invalid_argument("--grid is required for image");
    const auto grid = cape::augment_grid_2d(gen.grid, batch, cfg, rng);
    cape::save_positions(out_positions, grid);
    cape::save_embedding(out_embedding,
                         cape::embed_2d(grid, cape::image_spec<double>(gen.dim, gen.approx_image)),
                         cape::Modality::image);
    return 0;
  }

  cape::PositionSet1D<double> positions;
  if (!positions_path.empty()) {
    const auto loaded = cape::load_positions(positions_path);
    if (loaded.is_2d) {
      throw std::invalid_argument(
          "2d position files cannot be re-augmented; the grid pipeline starts from --grid");
    }
    positions = loaded.p1d;
  } else {
    positions = generate_1d(gen);
  }
  const auto augmented = cape::augment_positions_1d(positions, cfg, rng);
  cape::save_positions(out_positions, augmented);
  const auto spec = gen.modality == "audio" ? cape::audio_spec<double>(gen.dim)
                                            : cape::text_spec<double>(gen.dim);
  cape::save_embedding(out_embedding, embed_rows(augmented, spec),
                       gen.modality == "audio" ? cape::Modality::audio : cape::Modality::text);
  return 0;
}

std::vector<cape::Index> parse_index_list(const std::string& text, const std::string& what) {
  std::vector<cape::Index> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string token =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    char* end = nullptr;
    const long long v = std::strtoll(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || v < 1) {
      throw std::invalid_argument("bad " + what + " entry: '" + token + "'");
    }
    values.push_back(static_cast<cape::Index>(v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw std::invalid_argument(what + " list is empty");
  return values;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string token =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      throw std::invalid_argument("bad " + what + " entry: '" + token + "'");
    }
    values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw std::invalid_argument(what + " list is empty");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous augmented positional embeddings"};
  app.require_subcommand(1);

  // embed
  GenerationFlags embed_gen;
  std::string embed_layout = "concatenated";
  std::string embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "write a deterministic embedding file");
  add_generation_flags(embed_cmd, embed_gen, true);
  embed_cmd->add_option("--layout", embed_layout, "concatenated or interleaved")
      ->check(CLI::IsMember({"concatenated", "interleaved"}));
  embed_cmd->add_option("--out", embed_out, "output path")->required();

  // augment
  GenerationFlags augment_gen;
  std::string augment_config, augment_positions, augment_out_pos, augment_out_emb;
  std::optional<std::uint64_t> augment_seed;
  cape::Index augment_batch = 1;
  auto* augment_cmd =
      app.add_subcommand("augment", "augment positions and write positions + embeddings");
  add_generation_flags(augment_cmd, augment_gen, true);
  augment_cmd->add_option("--config", augment_config, "augmentation config JSON")->required();
  augment_cmd->add_option("--seed", augment_seed, "seed override (wins over CAPE_SEED and config)");
  augment_cmd->add_option("--positions", augment_positions, "input positions file (1d)");
  augment_cmd->add_option("--batch", augment_batch, "batch size for generated grids");
  augment_cmd->add_option("--out-positions", augment_out_pos, "augmented positions path")->required();
  augment_cmd->add_option("--out-embedding", augment_out_emb, "embedding path")->required();

  // viz
  cape::VizRequest viz;
  auto* viz_cmd = app.add_subcommand("viz", "write per-component PGM images of the image grid");
  viz_cmd->add_option("--grid", viz.grid_side, "patches per side")->required();
  viz_cmd->add_option("--dim", viz.dim, "embedding width K")->required();
  viz_cmd->add_option("--stride", viz.stride, "component stride (default 20)");
  viz_cmd->add_option("--out-dir", viz.out_dir, "output directory")->required();
  viz_cmd->add_flag("--approx-image-freqs", viz.approx_magnitudes,
                    "use the evenly spaced magnitude ladder");

  // check
  cape::CheckOptions check_opt;
  std::optional<std::uint64_t> check_seed;
  auto* check_cmd = app.add_subcommand("check", "run the invariant suite");
  check_cmd->add_option("--filter", check_opt.filter, "run only checks whose name contains this");
  check_cmd->add_flag("--self-test-negative", check_opt.sabotage,
                      "negative control: flip one sign and expect a failure");
  check_cmd->add_option("--seed", check_seed, "seed for randomized checks");

  // bench
  std::string bench_lengths = "10,100";
  cape::BenchOptions bench_opt;
  std::optional<std::uint64_t> bench_seed;
  auto* bench_cmd = app.add_subcommand("bench", "time the attention layer, CSV on stdout");
  bench_cmd->add_option("--lengths", bench_lengths, "comma-separated sequence lengths");
  bench_cmd->add_option("--dim", bench_opt.d_model, "model width (default 64)");
  bench_cmd->add_option("--relpos-context", bench_opt.relpos_context,
                        "clipping context for relative offsets (default 100)");
  bench_cmd->add_option("--repeats", bench_opt.repeats, "timed runs per row (default 100)");
  bench_cmd->add_option("--warmup", bench_opt.warmup, "discarded runs per row (default 10)");
  bench_cmd->add_option("--seed", bench_seed, "seed for weights and tokens");

  // plan
  std::string plan_durations;
  double plan_base_hop = 0.010;
  std::optional<std::uint64_t> plan_seed;
  auto* plan_cmd = app.add_subcommand("plan", "padding-free batch plan, JSON on stdout");
  plan_cmd->add_option("--durations", plan_durations, "comma-separated durations in seconds")
      ->required();
  plan_cmd->add_option("--base-hop", plan_base_hop, "base hop in seconds (default 0.010)");
  plan_cmd->add_option("--seed", plan_seed, "seed for the frame-drop draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (embed_cmd->parsed()) {
      return run_embed(embed_gen, embed_layout, embed_out);
    }
    if (augment_cmd->parsed()) {
      return run_augment(augment_gen, augment_config, augment_seed, augment_positions,
                         augment_batch, augment_out_pos, augment_out_emb);
    }
    if (viz_cmd->parsed()) {
      cape::run_viz(viz);
      return 0;
    }
    if (check_cmd->parsed()) {
      check_opt.seed = resolve_seed(check_seed, check_opt.seed);
      const auto results = cape::run_checks(check_opt);
      std::cout << cape::format_check_report(results);
      if (results.empty()) {
        std::cerr << "no checks match filter '" << check_opt.filter << "'\n";
        return 2;
      }
      return cape::all_passed(results) ? 0 : 1;
    }
    if (bench_cmd->parsed()) {
      bench_opt.lengths = parse_index_list(bench_lengths, "length");
      bench_opt.seed = resolve_seed(bench_seed, bench_opt.seed);
      std::cout << cape::bench_csv(cape::bench_layer(bench_opt));
      return 0;
    }
    if (plan_cmd->parsed()) {
      const auto durations = parse_double_list(plan_durations, "duration");
      cape::RngStream rng(resolve_seed(plan_seed, 42));
      std::cout << cape::batch_plan_to_json(
          cape::plan_padding_free_batch(durations, plan_base_hop, rng));
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
