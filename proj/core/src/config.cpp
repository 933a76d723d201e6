#include "neucrowd/config.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int to_int(std::string_view v) {
  const long long x = parse_int(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw DataError("integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t to_u64(std::string_view v) {
  const auto t = trim(v);
  std::uint64_t out = 0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || t.empty()) throw DataError("not an unsigned integer");
  return out;
}

bool to_bool(std::string_view v) {
  const auto t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw DataError("expected true or false");
}

std::vector<int> to_int_list(std::string_view v) {
  std::vector<int> out;
  auto t = trim(v);
  if (t.empty()) return out;
  while (true) {
    const auto pos = t.find(',');
    out.push_back(to_int(t.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    t.remove_prefix(pos + 1);
  }
  return out;
}

std::string from_int_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

struct Entry {
  const char* key;
  std::function<void(ResolvedConfig&, std::string_view)> set;
  std::function<std::string(const ResolvedConfig&)> get;
};

template <typename Access>
Entry int_entry(const char* key, Access access) {
  return {key, [access](ResolvedConfig& c, std::string_view v) { access(c) = to_int(v); },
          [access](const ResolvedConfig& c) {
            return std::to_string(access(const_cast<ResolvedConfig&>(c)));
          }};
}

template <typename Access>
Entry double_entry(const char* key, Access access) {
  return {key, [access](ResolvedConfig& c, std::string_view v) { access(c) = parse_double(v); },
          [access](const ResolvedConfig& c) {
            return format_double(access(const_cast<ResolvedConfig&>(c)));
          }};
}

template <typename Access>
Entry bool_entry(const char* key, Access access) {
  return {key, [access](ResolvedConfig& c, std::string_view v) { access(c) = to_bool(v); },
          [access](const ResolvedConfig& c) {
            return std::string(access(const_cast<ResolvedConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Access>
Entry u64_entry(const char* key, Access access) {
  return {key, [access](ResolvedConfig& c, std::string_view v) { access(c) = to_u64(v); },
          [access](const ResolvedConfig& c) {
            return std::to_string(access(const_cast<ResolvedConfig&>(c)));
          }};
}

#define NC_FIELD(expr) [](ResolvedConfig& c) -> auto& { return expr; }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      int_entry("n", NC_FIELD(c.run.n)),
      int_entry("batch_size", NC_FIELD(c.run.batch_size)),
      int_entry("pool_size", NC_FIELD(c.run.pool_size)),
      int_entry("epochs", NC_FIELD(c.run.epochs)),
      int_entry("steps_per_epoch", NC_FIELD(c.run.steps_per_epoch)),
      double_entry("learning_rate", NC_FIELD(c.run.learning_rate)),
      double_entry("dropout", NC_FIELD(c.run.dropout)),
      double_entry("delta", NC_FIELD(c.run.delta)),
      double_entry("beta", NC_FIELD(c.run.beta)),
      double_entry("hard_fraction", NC_FIELD(c.run.hard_fraction)),
      double_entry("offset_c", NC_FIELD(c.run.offset_c)),
      double_entry("eta", NC_FIELD(c.run.eta)),
      int_entry("embedding_dim", NC_FIELD(c.run.embedding_dim)),
      {"hidden_dims",
       [](ResolvedConfig& c, std::string_view v) { c.run.hidden_dims = to_int_list(v); },
       [](const ResolvedConfig& c) { return from_int_list(c.run.hidden_dims); }},
      double_entry("init_stddev", NC_FIELD(c.run.init_stddev)),
      double_entry("adadelta_rho", NC_FIELD(c.run.adadelta_rho)),
      double_entry("adadelta_epsilon", NC_FIELD(c.run.adadelta_epsilon)),
      u64_entry("seed", NC_FIELD(c.run.seed)),
      bool_entry("use_sa", NC_FIELD(c.run.use_sa)),
      bool_entry("use_ra", NC_FIELD(c.run.use_ra)),
      bool_entry("use_sn", NC_FIELD(c.run.use_sn)),
      bool_entry("normalize_anchor", NC_FIELD(c.run.normalize_anchor)),
      bool_entry("anchor_per_class", NC_FIELD(c.run.anchor_per_class)),
      bool_entry("anchor_in_denominator", NC_FIELD(c.run.anchor_in_denominator)),
      bool_entry("sampler_rank_targets", NC_FIELD(c.run.sampler_rank_targets)),
      int_entry("safety_every", NC_FIELD(c.run.safety_every)),
      bool_entry("early_stopping", NC_FIELD(c.run.early_stopping)),
      int_entry("patience", NC_FIELD(c.run.patience)),
      double_entry("validation_c", NC_FIELD(c.run.validation_c)),
      int_entry("validation_max_iter", NC_FIELD(c.run.validation_max_iter)),

      int_entry("n_features", NC_FIELD(c.synth.n_features)),
      int_entry("n_informative", NC_FIELD(c.synth.n_informative)),
      int_entry("n_clusters", NC_FIELD(c.synth.n_clusters)),
      int_entry("clusters_per_class", NC_FIELD(c.synth.clusters_per_class)),
      double_entry("cube_side", NC_FIELD(c.synth.cube_side)),
      double_entry("cluster_std", NC_FIELD(c.synth.cluster_std)),
      int_entry("train_size", NC_FIELD(c.synth.train_size)),
      int_entry("validation_size", NC_FIELD(c.synth.validation_size)),
      int_entry("test_size", NC_FIELD(c.synth.test_size)),
      int_entry("num_workers", NC_FIELD(c.synth.num_workers)),
      double_entry("flip_mean", NC_FIELD(c.synth.workers.mean)),
      double_entry("flip_stddev", NC_FIELD(c.synth.workers.stddev)),
      double_entry("flip_lower", NC_FIELD(c.synth.workers.lower)),
      double_entry("flip_upper", NC_FIELD(c.synth.workers.upper)),
      u64_entry("data_seed", NC_FIELD(c.synth.seed)),

      double_entry("c_min", NC_FIELD(c.eval.c_min)),
      double_entry("c_max", NC_FIELD(c.eval.c_max)),
      int_entry("c_points", NC_FIELD(c.eval.c_points)),
      int_entry("logreg_max_iter", NC_FIELD(c.eval.logreg.max_iter)),
      double_entry("logreg_tol", NC_FIELD(c.eval.logreg.grad_tol)),
  };
  return entries;
}

#undef NC_FIELD

const Entry& find_entry(std::string_view key) {
  for (const auto& e : registry()) {
    if (key == e.key) return e;
  }
  throw UsageError(std::string(key), "unknown config key '" + std::string(key) + "'");
}

std::string json_scalar_text(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += json_scalar_text(key, v[i]);
    }
    return out;
  }
  throw UsageError(key, "unsupported JSON value for '" + key + "'");
}

}  // namespace

void ResolvedConfig::validate() const {
  run.validate();
  try {
    synth.validate();
  } catch (const ConfigError& e) {
    throw UsageError("synth", e.what());
  }
  eval.validate();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.emplace_back(e.key);
  return keys;
}

void set_config_value(ResolvedConfig& config, const std::string& key, const std::string& value) {
  const Entry& entry = find_entry(key);
  try {
    entry.set(config, value);
  } catch (const DataError& e) {
    throw UsageError(key, "bad value '" + value + "' for '" + key + "': " + e.what());
  }
}

std::string get_config_value(const ResolvedConfig& config, const std::string& key) {
  return find_entry(key).get(config);
}

ResolvedConfig parse_config_text(const std::string& text, ResolvedConfig base) {
  const auto body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config", std::string("config JSON does not parse: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
      set_config_value(base, key, json_scalar_text(key, value));
    }
    return base;
  }

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config", "config line " + std::to_string(lineno) + " has no '='");
    }
    set_config_value(base, std::string(trim(view.substr(0, eq))),
                     std::string(trim(view.substr(eq + 1))));
  }
  return base;
}

ResolvedConfig load_config(const std::filesystem::path& path, ResolvedConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw UsageError("config", e.what());
  }
  return parse_config_text(text, std::move(base));
}

ResolvedConfig resolve_config(const std::filesystem::path* path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  ResolvedConfig config;
  if (path) config = load_config(*path, config);
  for (const auto& [key, value] : overrides) set_config_value(config, key, value);
  config.validate();
  return config;
}

std::string to_config_text(const ResolvedConfig& config) {
  std::string out;
  for (const auto& e : registry()) {
    out += e.key;
    out += " = ";
    out += e.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace neucrowd
