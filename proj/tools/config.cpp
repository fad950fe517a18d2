#include "config.hpp"

#include <fstream>
#include <sstream>

namespace fqk::cli {

Section::Section(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
}

const nlohmann::json& Section::at(const std::string& key, nlohmann::json::value_t want,
                                  const char* kind) {
  const auto& v = obj_.at(key);
  const bool ok = want == nlohmann::json::value_t::number_float ? v.is_number() : v.type() == want;
  if (!ok) throw ConfigError(path_ + "." + key + ": expected " + kind);
  used_.insert(key);
  return v;
}

double Section::number(const std::string& key) {
  if (!has(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
  const double v = at(key, nlohmann::json::value_t::number_float, "a number").get<double>();
  resolved_[key] = v;
  return v;
}

double Section::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : (resolved_[key] = fallback, fallback);
}

long Section::integer(const std::string& key, long fallback) {
  long v = fallback;
  if (has(key)) {
    const auto& j = obj_.at(key);
    if (!j.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    used_.insert(key);
    v = j.get<long>();
  }
  resolved_[key] = v;
  return v;
}

std::string Section::text(const std::string& key, const std::string& fallback) {
  std::string v = fallback;
  if (has(key)) v = at(key, nlohmann::json::value_t::string, "a string").get<std::string>();
  resolved_[key] = v;
  return v;
}

bool Section::flag(const std::string& key, bool fallback) {
  bool v = fallback;
  if (has(key)) v = at(key, nlohmann::json::value_t::boolean, "true or false").get<bool>();
  resolved_[key] = v;
  return v;
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& fallback) {
  std::vector<double> v = fallback;
  if (has(key)) {
    const auto& j = at(key, nlohmann::json::value_t::array, "an array of numbers");
    v.clear();
    for (const auto& x : j) {
      if (!x.is_number()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
      v.push_back(x.get<double>());
    }
  }
  resolved_[key] = v;
  return v;
}

std::vector<std::string> Section::texts(const std::string& key,
                                       const std::vector<std::string>& fallback) {
  std::vector<std::string> v = fallback;
  if (has(key)) {
    const auto& j = at(key, nlohmann::json::value_t::array, "an array of strings");
    v.clear();
    for (const auto& x : j) {
      if (!x.is_string()) throw ConfigError(path_ + "." + key + ": expected an array of strings");
      v.push_back(x.get<std::string>());
    }
  }
  resolved_[key] = v;
  return v;
}

Section Section::child(const std::string& key) {
  if (!has(key)) return Section(nlohmann::json::object(), path_ + "." + key);
  return Section(at(key, nlohmann::json::value_t::object, "an object"), path_ + "." + key);
}

void Section::finish() const {
  for (const auto& [k, v] : obj_.items()) {
    if (!used_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  RunConfig cfg;
  try {
    cfg.raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Section top(cfg.raw, "config");
  if (!top.has("schema_version")) throw ConfigError("config: missing required key 'schema_version'");
  if (top.integer("schema_version", 0) != 1) throw ConfigError("config.schema_version: only 1 is supported");
  if (!top.has("experiment")) throw ConfigError("config: missing required key 'experiment'");
  cfg.experiment = top.text("experiment", "");
  cfg.out_dir = top.text("out_dir", "out");
  const long workers = top.integer("workers", 0);
  if (workers < 0) throw ConfigError("config.workers: must be >= 0");
  cfg.workers = static_cast<std::size_t>(workers);
  const long seed = top.integer("seed", 0);
  if (seed < 0) throw ConfigError("config.seed: must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);

  Section integ = top.child("integrator");
  try {
    cfg.integrator.method = integrator_method_from_string(integ.text("method", "magnus4"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.integrator.method: ") + e.what());
  }
  cfg.integrator.substeps_per_fastest_period =
      static_cast<int>(integ.integer("substeps_per_fastest_period", cfg.integrator.substeps_per_fastest_period));
  cfg.integrator.tolerance = integ.number("tolerance", cfg.integrator.tolerance);
  cfg.integrator.estimate_error = integ.flag("estimate_error", cfg.integrator.estimate_error);
  cfg.integrator.max_refinements =
      static_cast<int>(integ.integer("max_refinements", cfg.integrator.max_refinements));
  integ.finish();
  try {
    cfg.integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.integrator: ") + e.what());
  }
  cfg.integrator_json = integ.resolved();

  if (top.has("params")) {
    cfg.params = cfg.raw.at("params");
    if (!cfg.params.is_object()) throw ConfigError("config.params: expected an object");
    top.child("params");
  } else {
    cfg.params = nlohmann::json::object();
  }
  top.finish();
  return cfg;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

OutputSet::OutputSet(std::filesystem::path dir, nlohmann::json resolved)
    : dir_(std::move(dir)), resolved_(std::move(resolved)), hash_(hex64(fnv1a(resolved_.dump()))) {
  std::filesystem::create_directories(dir_);
}

std::ofstream OutputSet::csv(const std::string& name) {
  const auto p = dir_ / name;
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << "# fqk " << kToolVersion << " config_hash=" << hash_ << " config=" << resolved_.dump() << '\n';
  files_.push_back(name);
  return out;
}

void OutputSet::json(const std::string& name, const nlohmann::json& body) {
  nlohmann::json doc = {{"tool", "fqk"}, {"version", kToolVersion}, {"config_hash", hash_},
                        {"config", resolved_}, {"result", body}};
  std::ofstream out(dir_ / name);
  if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  out << doc.dump(2) << '\n';
  files_.push_back(name);
}

void OutputSet::write_manifest() {
  nlohmann::json doc = {{"tool", "fqk"}, {"version", kToolVersion}, {"config_hash", hash_},
                        {"config", resolved_}, {"files", files_}};
  std::ofstream out(dir_ / "manifest.json");
  out << doc.dump(2) << '\n';
}

}  // namespace fqk::cli
