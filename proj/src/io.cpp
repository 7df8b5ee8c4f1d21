#include "cape/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cape/frequency.hpp"
#include "cape/positions.hpp"

namespace cape {

namespace {

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  // 17 significant digits make the decimal form parse back to the same bits.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_value(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (end == begin || *end != '\0') {
    throw std::invalid_argument("cannot parse number: '" + token + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Splits file text into `# key: value` headers and body lines.
struct ParsedFile {
  std::vector<std::pair<std::string, std::string>> headers;
  std::vector<std::string> body;
};

ParsedFile parse_file(const std::string& text) {
  ParsedFile parsed;
  bool in_headers = true;
  for (const std::string& raw : split(text, '\n')) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (in_headers && line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos || line.size() < 2 || line[1] != ' ') {
        throw std::invalid_argument("malformed header line: '" + line + "'");
      }
      std::string key = line.substr(2, colon - 2);
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value.front() == ' ') value.erase(value.begin());
      parsed.headers.emplace_back(std::move(key), std::move(value));
    } else {
      in_headers = false;
      parsed.body.push_back(std::move(line));
    }
  }
  return parsed;
}

// Headers are a fixed sequence per format; anything else is rejected so a
// load-save cycle can be byte-identical.
void require_headers(const ParsedFile& parsed, const std::vector<std::string>& keys) {
  if (parsed.headers.size() != keys.size()) {
    throw std::invalid_argument("expected " + std::to_string(keys.size()) + " header lines, got " +
                                std::to_string(parsed.headers.size()));
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (parsed.headers[i].first != keys[i]) {
      throw std::invalid_argument("expected header '" + keys[i] + "', got '" +
                                  parsed.headers[i].first + "'");
    }
  }
}

Index parse_index(const std::string& value) {
  const double v = parse_value(value);
  const auto n = static_cast<Index>(v);
  if (static_cast<double>(n) != v || n < 0) {
    throw std::invalid_argument("expected a non-negative integer, got '" + value + "'");
  }
  return n;
}

Modality modality_from_string(const std::string& s) {
  if (s == "text") return Modality::text;
  if (s == "image") return Modality::image;
  if (s == "audio") return Modality::audio;
  throw std::invalid_argument("unknown modality: '" + s + "'");
}

Layout layout_from_string(const std::string& s) {
  if (s == "concatenated") return Layout::concatenated;
  if (s == "interleaved") return Layout::interleaved;
  throw std::invalid_argument("unknown layout: '" + s + "'");
}

}  // namespace

std::string embedding_to_text(const Embedding<double>& emb, Modality modality) {
  std::string out;
  out += "# format: cape-emb v1\n";
  out += "# modality: " + to_string(modality) + "\n";
  out += "# dim_K: " + std::to_string(emb.dim()) + "\n";
  out += "# n_tokens: " + std::to_string(emb.tokens()) + "\n";
  out += "# layout: " + to_string(emb.layout) + "\n";
  for (Index i = 0; i < emb.tokens(); ++i) {
    for (Index k = 0; k < emb.dim(); ++k) {
      if (k > 0) out += ',';
      out += format_value(emb.values(i, k));
    }
    out += '\n';
  }
  return out;
}

LoadedEmbedding embedding_from_text(const std::string& text) {
  const ParsedFile parsed = parse_file(text);
  require_headers(parsed, {"format", "modality", "dim_K", "n_tokens", "layout"});
  if (parsed.headers[0].second != "cape-emb v1") {
    throw std::invalid_argument("not a cape-emb v1 file");
  }
  LoadedEmbedding loaded;
  loaded.modality = modality_from_string(parsed.headers[1].second);
  const Index dim = parse_index(parsed.headers[2].second);
  const Index tokens = parse_index(parsed.headers[3].second);
  loaded.embedding.layout = layout_from_string(parsed.headers[4].second);
  if (static_cast<Index>(parsed.body.size()) != tokens) {
    throw std::invalid_argument("n_tokens header does not match body row count");
  }
  loaded.embedding.values.resize(tokens, dim);
  for (Index i = 0; i < tokens; ++i) {
    const auto cells = split(parsed.body[static_cast<std::size_t>(i)], ',');
    if (static_cast<Index>(cells.size()) != dim) {
      throw std::invalid_argument("row " + std::to_string(i) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(dim));
    }
    for (Index k = 0; k < dim; ++k) {
      loaded.embedding.values(i, k) = parse_value(cells[static_cast<std::size_t>(k)]);
    }
  }
  return loaded;
}

std::string positions_to_text(const PositionSet1D<double>& positions) {
  std::string out;
  out += "# format: cape-pos v1\n";
  out += "# kind: 1d\n";
  out += "# batch: " + std::to_string(positions.rows()) + "\n";
  out += "# n_tokens: " + std::to_string(positions.cols()) + "\n";
  for (Index b = 0; b < positions.rows(); ++b) {
    for (Index t = 0; t < positions.cols(); ++t) {
      if (t > 0) out += ',';
      out += format_value(positions(b, t));
    }
    out += '\n';
  }
  return out;
}

std::string positions_to_text(const PositionGrid2D<double>& grid) {
  if (grid.batch() == 0) {
    throw std::invalid_argument("positions_to_text: empty grid batch");
  }
  const Index rows = grid.x.front().rows(), cols = grid.x.front().cols();
  for (Index b = 0; b < grid.batch(); ++b) {
    const auto& xb = grid.x[static_cast<std::size_t>(b)];
    const auto& yb = grid.y[static_cast<std::size_t>(b)];
    if (xb.rows() != rows || xb.cols() != cols || yb.rows() != rows || yb.cols() != cols) {
      throw std::invalid_argument("positions_to_text: ragged grid batch");
    }
  }
  std::string out;
  out += "# format: cape-pos v1\n";
  out += "# kind: 2d\n";
  out += "# batch: " + std::to_string(grid.batch()) + "\n";
  out += "# rows: " + std::to_string(rows) + "\n";
  out += "# cols: " + std::to_string(cols) + "\n";
  for (Index b = 0; b < grid.batch(); ++b) {
    const auto& xb = grid.x[static_cast<std::size_t>(b)];
    const auto& yb = grid.y[static_cast<std::size_t>(b)];
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        out += format_value(xb(r, c));
        out += ',';
        out += format_value(yb(r, c));
        out += '\n';
      }
    }
  }
  return out;
}

LoadedPositions positions_from_text(const std::string& text) {
  const ParsedFile parsed = parse_file(text);
  if (parsed.headers.size() < 2 || parsed.headers[0].first != "format" ||
      parsed.headers[0].second != "cape-pos v1") {
    throw std::invalid_argument("not a cape-pos v1 file");
  }
  LoadedPositions loaded;
  const std::string kind = parsed.headers[1].second;
  if (kind == "1d") {
    require_headers(parsed, {"format", "kind", "batch", "n_tokens"});
    const Index batch = parse_index(parsed.headers[2].second);
    const Index n = parse_index(parsed.headers[3].second);
    if (static_cast<Index>(parsed.body.size()) != batch) {
      throw std::invalid_argument("batch header does not match body row count");
    }
    loaded.p1d.resize(batch, n);
    for (Index b = 0; b < batch; ++b) {
      const auto cells = split(parsed.body[static_cast<std::size_t>(b)], ',');
      if (static_cast<Index>(cells.size()) != n) {
        throw std::invalid_argument("row " + std::to_string(b) + " has wrong column count");
      }
      for (Index t = 0; t < n; ++t) {
        loaded.p1d(b, t) = parse_value(cells[static_cast<std::size_t>(t)]);
      }
    }
    return loaded;
  }
  if (kind == "2d") {
    require_headers(parsed, {"format", "kind", "batch", "rows", "cols"});
    const Index batch = parse_index(parsed.headers[2].second);
    const Index rows = parse_index(parsed.headers[3].second);
    const Index cols = parse_index(parsed.headers[4].second);
    if (static_cast<Index>(parsed.body.size()) != batch * rows * cols) {
      throw std::invalid_argument("2d body row count does not match batch*rows*cols");
    }
    loaded.is_2d = true;
    loaded.p2d.x.assign(static_cast<std::size_t>(batch), Matrix<double>(rows, cols));
    loaded.p2d.y.assign(static_cast<std::size_t>(batch), Matrix<double>(rows, cols));
    std::size_t line = 0;
    for (Index b = 0; b < batch; ++b) {
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c, ++line) {
          const auto cells = split(parsed.body[line], ',');
          if (cells.size() != 2) {
            throw std::invalid_argument("2d body line must be 'x,y'");
          }
          loaded.p2d.x[static_cast<std::size_t>(b)](r, c) = parse_value(cells[0]);
          loaded.p2d.y[static_cast<std::size_t>(b)](r, c) = parse_value(cells[1]);
        }
      }
    }
    return loaded;
  }
  throw std::invalid_argument("unknown position kind: '" + kind + "'");
}

void save_embedding(const std::string& path, const Embedding<double>& emb, Modality modality) {
  write_text_file(path, embedding_to_text(emb, modality));
}

LoadedEmbedding load_embedding(const std::string& path) {
  return embedding_from_text(read_text_file(path));
}

void save_positions(const std::string& path, const PositionSet1D<double>& positions) {
  write_text_file(path, positions_to_text(positions));
}

void save_positions(const std::string& path, const PositionGrid2D<double>& grid) {
  write_text_file(path, positions_to_text(grid));
}

LoadedPositions load_positions(const std::string& path) {
  return positions_from_text(read_text_file(path));
}

std::string pgm_from_matrix(const Matrix<double>& values) {
  if (values.size() == 0) {
    throw std::invalid_argument("pgm_from_matrix: empty image");
  }
  std::string out = "P2\n";
  out += std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n255\n";
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      const long pixel = std::lround(255.0 * (values(r, c) + 1.0) / 2.0);
      if (c > 0) out += ' ';
      out += std::to_string(std::clamp(pixel, 0L, 255L));
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> run_viz(const VizRequest& req) {
  if (req.stride < 1) {
    throw std::invalid_argument("run_viz: stride must be >= 1");
  }
  const FrequencySpec<double> spec = image_spec<double>(req.dim, req.approx_magnitudes);
  const PositionGrid2D<double> grid = image_positions(req.grid_side, req.grid_side);
  const Embedding<double> emb = embed_2d(grid, spec);

  std::error_code ec;
  std::filesystem::create_directories(req.out_dir, ec);
  if (ec) {
    throw std::runtime_error("run_viz: cannot create directory '" + req.out_dir + "'");
  }
  std::vector<std::string> paths;
  const Index p = req.grid_side;
  for (Index comp = 0; comp < req.dim; comp += req.stride) {
    Matrix<double> image(p, p);
    for (Index r = 0; r < p; ++r) {
      for (Index c = 0; c < p; ++c) {
        image(r, c) = emb.values(r * p + c, comp);
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "component_%03lld.pgm", static_cast<long long>(comp));
    const std::string path = (std::filesystem::path(req.out_dir) / name).string();
    write_text_file(path, pgm_from_matrix(image));
    paths.push_back(path);
  }
  return paths;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << content;
  if (!out.flush()) {
    throw std::runtime_error("write to '" + path + "' failed");
  }
}

AugmentationConfig augmentation_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config JSON parse error: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("config JSON must be an object");
  }
  const std::vector<std::string> known = {"max_global_shift", "max_local_shift", "max_scale",
                                          "mean_normalize",   "augment",         "seed"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw std::invalid_argument("unknown config key: '" + item.key() + "'");
    }
  }
  AugmentationConfig cfg;
  try {
    cfg.max_global_shift = j.at("max_global_shift").get<double>();
    cfg.max_local_shift = j.at("max_local_shift").get<double>();
    cfg.max_scale = j.at("max_scale").get<double>();
    cfg.mean_normalize = j.at("mean_normalize").get<bool>();
    cfg.mode = j.at("augment").get<bool>() ? AugmentationMode::train : AugmentationMode::inference;
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string augmentation_config_to_json(const AugmentationConfig& cfg) {
  nlohmann::json j;
  j["max_global_shift"] = cfg.max_global_shift;
  j["max_local_shift"] = cfg.max_local_shift;
  j["max_scale"] = cfg.max_scale;
  j["mean_normalize"] = cfg.mean_normalize;
  j["augment"] = cfg.mode == AugmentationMode::train;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

std::string batch_plan_to_json(const BatchPlan& plan) {
  nlohmann::json j;
  j["durations"] = plan.durations;
  j["base_hop"] = plan.base_hop;
  j["target_frames"] = plan.target_frames;
  j["hops"] = plan.hops;
  j["keep_masks"] = plan.keep_masks;
  return j.dump(2) + "\n";
}

}  // namespace cape
