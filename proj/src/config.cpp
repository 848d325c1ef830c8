// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>
#include <vector>

#include "dualfield/errors.hpp"

namespace dualfield {

namespace {

using Member = std::variant<int RunConfig::*, std::int64_t RunConfig::*,
                            std::uint64_t RunConfig::*, double RunConfig::*, bool RunConfig::*,
                            std::string RunConfig::*>;

struct Key {
  const char* section;  // "" for top level
  const char* name;
  Member member;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"", "seed", &RunConfig::seed},
      {"", "deterministic", &RunConfig::deterministic},
      {"", "threads", &RunConfig::threads},
      {"field", "resolution", &RunConfig::field_resolution},
      {"field", "density_init", &RunConfig::field_density_init},
      {"field", "w_max_sigma", &RunConfig::field_w_max_sigma},
      {"field", "w_max_color", &RunConfig::field_w_max_color},
      {"field", "lambda", &RunConfig::field_lambda},
      {"trainer", "iterations", &RunConfig::trainer_iterations},
      {"trainer", "batch_size", &RunConfig::trainer_batch_size},
      {"trainer", "n_samples", &RunConfig::trainer_n_samples},
      {"trainer", "strategy", &RunConfig::trainer_strategy},
      {"trainer", "lr", &RunConfig::trainer_lr},
      {"trainer", "beta1", &RunConfig::trainer_beta1},
      {"trainer", "beta2", &RunConfig::trainer_beta2},
      {"trainer", "eps", &RunConfig::trainer_eps},
      {"idu", "d", &RunConfig::idu_d},
      {"idu", "n", &RunConfig::idu_n},
      {"idu", "total_iterations", &RunConfig::idu_total_iterations},
      {"idu", "t0", &RunConfig::idu_t0},
      {"idu", "sa", &RunConfig::idu_sa},
      {"idu", "cci", &RunConfig::idu_cci},
      {"idu", "prompt", &RunConfig::idu_prompt},
      {"idu", "s_image", &RunConfig::idu_s_image},
      {"idu", "s_text", &RunConfig::idu_s_text},
      {"idu", "steps", &RunConfig::idu_steps},
      {"idu", "checkpoint_every", &RunConfig::idu_checkpoint_every},
      {"renderer", "n_samples", &RunConfig::renderer_n_samples},
      {"renderer", "near", &RunConfig::renderer_near},
      {"renderer", "far", &RunConfig::renderer_far},
      {"renderer", "background_r", &RunConfig::renderer_background_r},
      {"renderer", "background_g", &RunConfig::renderer_background_g},
      {"renderer", "background_b", &RunConfig::renderer_background_b},
      {"backend", "editor", &RunConfig::backend_editor},
      {"backend", "embedder", &RunConfig::backend_embedder},
      {"backend", "endpoint", &RunConfig::backend_endpoint},
      {"backend", "sticky_threshold", &RunConfig::backend_sticky_threshold},
      {"backend", "timeout", &RunConfig::backend_timeout},
  };
  return k;
}

std::string dotted(const Key& k) {
  return *k.section ? std::string(k.section) + "." + k.name : std::string(k.name);
}

const Key* find_key(std::string_view section, std::string_view name) {
  for (const auto& k : keys()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string parse_string(std::string_view v, const std::string& where) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
    throw ConfigError(where + ": expected a quoted string");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    char c = v[i];
    if (c == '"') throw ConfigError(where + ": unescaped quote in string");
    if (c == '\\') {
      if (i + 2 >= v.size()) throw ConfigError(where + ": dangling escape");
      switch (v[++i]) {
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        default: throw ConfigError(where + ": unsupported escape");
      }
    }
    out += c;
  }
  return out;
}

template <class T>
T parse_integer(std::string_view v, const std::string& where) {
  std::string digits;
  for (char c : v) {
    if (c != '_') digits += c;
  }
  if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
  T out{};
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    throw ConfigError(where + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view v, const std::string& where) {
  std::string s;
  for (char c : v) {
    if (c != '_') s += c;
  }
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  if (s == "inf" || s == "nan" || s == "-inf" || s == "-nan") {
    throw ConfigError(where + ": non-finite values are not allowed");
  }
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

void assign(RunConfig& config, const Key& key, std::string_view value, const std::string& where) {
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true") {
            config.*member = true;
          } else if (value == "false") {
            config.*member = false;
          } else {
            throw ConfigError(where + ": expected true or false");
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          config.*member = parse_string(value, where);
        } else if constexpr (std::is_same_v<T, double>) {
          config.*member = parse_double(value, where);
        } else {
          config.*member = parse_integer<T>(value, where);
        }
      },
      key.member);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  // Keep floats recognizable as floats in the dump.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string format_string(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string format_value(const RunConfig& config, const Key& key) {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        const auto& v = config.*member;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return format_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      key.member);
}

SamplingStrategy parse_strategy(const std::string& s) {
  if (s == "uniform") return SamplingStrategy::kUniform;
  if (s == "stratified") return SamplingStrategy::kStratified;
  throw ConfigError("trainer.strategy must be 'uniform' or 'stratified', got '" + s + "'");
}

}  // namespace

RunConfig RunConfig::paper_scale() {
  RunConfig c;
  c.field_resolution = 128;
  c.trainer_iterations = 30000;
  c.trainer_batch_size = 4096;
  c.trainer_n_samples = 128;
  c.renderer_n_samples = 128;
  return c;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(threads >= 0, "threads must be >= 0");
  require(field_resolution >= 2, "field.resolution must be >= 2");
  require(std::isfinite(field_density_init), "field.density_init must be finite");
  require(field_w_max_sigma >= 0.0 && field_w_max_sigma <= 1.0, "field.w_max_sigma must lie in [0,1]");
  require(field_w_max_color >= 0.0 && field_w_max_color <= 1.0, "field.w_max_color must lie in [0,1]");
  require(field_lambda > 0.0, "field.lambda must be > 0");
  require(trainer_iterations >= 0, "trainer.iterations must be >= 0");
  require(trainer_batch_size >= 1, "trainer.batch_size must be >= 1");
  require(trainer_n_samples >= 1, "trainer.n_samples must be >= 1");
  parse_strategy(trainer_strategy);
  require(trainer_lr > 0.0, "trainer.lr must be > 0");
  require(trainer_beta1 >= 0.0 && trainer_beta1 < 1.0, "trainer.beta1 must lie in [0,1)");
  require(trainer_beta2 >= 0.0 && trainer_beta2 < 1.0, "trainer.beta2 must lie in [0,1)");
  require(trainer_eps > 0.0, "trainer.eps must be > 0");
  require(idu_d >= 1, "idu.d must be >= 1");
  require(idu_n >= 1, "idu.n must be >= 1");
  require(idu_total_iterations >= 0, "idu.total_iterations must be >= 0");
  require(idu_t0 > 0.0, "idu.t0 must be > 0");
  require(idu_s_image >= 0.0 && idu_s_text >= 0.0, "guidance weights must be >= 0");
  require(idu_steps >= 1, "idu.steps must be >= 1");
  require(idu_checkpoint_every >= 0, "idu.checkpoint_every must be >= 0");
  require(renderer_n_samples >= 1, "renderer.n_samples must be >= 1");
  require(renderer_near > 0.0 && renderer_far > renderer_near, "renderer needs 0 < near < far");
  require(backend_sticky_threshold >= 0.0, "backend.sticky_threshold must be >= 0");
  require(backend_timeout > 0.0, "backend.timeout must be > 0");
}

Vec3 RunConfig::background() const {
  return {renderer_background_r, renderer_background_g, renderer_background_b};
}

RayOptions RunConfig::rays() const {
  RayOptions r;
  r.near = renderer_near;
  r.far = renderer_far;
  return r;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.iterations = trainer_iterations;
  t.batch_size = trainer_batch_size;
  t.n_samples = trainer_n_samples;
  t.strategy = parse_strategy(trainer_strategy);
  t.adam = {trainer_lr, trainer_beta1, trainer_beta2, trainer_eps};
  t.resolution = GridResolution{field_resolution, field_resolution, field_resolution};
  t.density_init = static_cast<float>(field_density_init);
  t.background = background();
  t.rays = rays();
  t.seed = seed;
  t.deterministic = deterministic;
  t.threads = threads;
  return t;
}

IDUConfig RunConfig::idu_config() const {
  IDUConfig c;
  c.d = idu_d;
  c.n = idu_n;
  c.total_iterations = idu_total_iterations;
  c.sa_enabled = idu_sa;
  c.cci_enabled = idu_cci;
  c.T0 = idu_t0;
  c.editor.prompt = idu_prompt;
  c.editor.s_image = idu_s_image;
  c.editor.s_text = idu_s_text;
  c.editor.steps = idu_steps;
  c.editor.seed = seed;
  c.batch_size = trainer_batch_size;
  c.n_samples = trainer_n_samples;
  c.render_samples = renderer_n_samples;
  c.strategy = parse_strategy(trainer_strategy);
  c.background = background();
  c.rays = rays();
  c.adam = {trainer_lr, trainer_beta1, trainer_beta2, trainer_eps};
  c.seed = seed;
  c.deterministic = deterministic;
  c.threads = threads;
  c.checkpoint_every = idu_checkpoint_every;
  return c;
}

BlendState RunConfig::blend_state() const {
  BlendState b;
  b.w_max_sigma = field_w_max_sigma;
  b.w_max_color = field_w_max_color;
  b.lambda = field_lambda;
  return b;
}

BackendSettings RunConfig::backend_settings() const {
  BackendSettings s;
  s.editor = backend_editor;
  s.embedder = backend_embedder;
  s.endpoint = backend_endpoint;
  s.sticky_threshold = backend_sticky_threshold;
  s.timeout_seconds = backend_timeout;
  return s;
}

std::set<std::string> apply_toml(RunConfig& config, std::string_view text) {
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "field" && section != "trainer" && section != "idu" &&
          section != "renderer" && section != "backend") {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string_view name = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Key* key = find_key(section, name);
    if (!key) {
      throw ConfigError(where + ": unknown key '" +
                        (section.empty() ? std::string(name) : section + "." + std::string(name)) +
                        "'");
    }
    if (!seen.insert(dotted(*key)).second) {
      throw ConfigError(where + ": duplicate key '" + dotted(*key) + "'");
    }
    assign(config, *key, value, where);
  }
  return seen;
}

std::set<std::string> apply_toml_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return apply_toml(config, text.str());
}

void apply_override(RunConfig& config, std::string_view dotted_key, std::string_view value) {
  const auto dot = dotted_key.find('.');
  const std::string_view section = dot == std::string_view::npos ? "" : dotted_key.substr(0, dot);
  const std::string_view name =
      dot == std::string_view::npos ? dotted_key : dotted_key.substr(dot + 1);
  const Key* key = find_key(section, name);
  if (!key) throw ConfigError("unknown config key '" + std::string(dotted_key) + "'");
  assign(config, *key, trim(value), "override " + std::string(dotted_key));
}

std::string print_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    out += std::string(k.name) + " = " + format_value(config, k) + "\n";
  }
  return out;
}

}  // namespace dualfield
