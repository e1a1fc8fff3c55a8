#include "mhcl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mhcl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::node_classification ? "node_classification" : "link_prediction";
}

std::string to_string(CurvatureMode mode) { return mode == CurvatureMode::learned ? "learned" : "euclidean"; }

std::string to_string(ContrastiveForm form) {
  return form == ContrastiveForm::info_nce ? "info_nce" : "paper_literal";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (weight_decay < 0) fail("weight_decay must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (dropout < 0 || dropout >= 1) fail("dropout must lie in [0, 1)");
  if (lambda < 0 || lambda > 1) fail("lambda must lie in [0, 1]");
  if (!(tau > 0)) fail("tau must be positive");
  if (heads < 1 || metapath_dim < 1 || node_dim < 1 || output_dim < 0) fail("dimensions must be positive");
  if (metapath_dim % heads != 0) fail("metapath_dim must be divisible by heads");
  if (max_length < 2) fail("max_length must be >= 2");
  if (!(train_ratio > 0 && train_ratio < 1)) fail("train_ratio must lie in (0, 1)");
  if (val_fraction < 0 || val_fraction >= 1) fail("val_fraction must lie in [0, 1)");
  if (!(link_test_fraction > 0 && link_test_fraction < 1)) fail("link_test_fraction must lie in (0, 1)");
  if (threads < 1) fail("threads must be >= 1");
}

std::map<std::string, std::string> to_key_values(const TrainConfig& c) {
  return {
      {"nodes", c.nodes},
      {"edges", c.edges},
      {"task", to_string(c.task)},
      {"target_type", c.target_type},
      {"learning_rate", format_double(c.learning_rate)},
      {"weight_decay", format_double(c.weight_decay)},
      {"epochs", std::to_string(c.epochs)},
      {"patience", std::to_string(c.patience)},
      {"dropout", format_double(c.dropout)},
      {"seed", std::to_string(c.seed)},
      {"lambda", format_double(c.lambda)},
      {"tau", format_double(c.tau)},
      {"contrastive_form", to_string(c.contrastive_form)},
      {"curvature_mode", to_string(c.curvature_mode)},
      {"heads", std::to_string(c.heads)},
      {"metapath_dim", std::to_string(c.metapath_dim)},
      {"node_dim", std::to_string(c.node_dim)},
      {"output_dim", std::to_string(c.output_dim)},
      {"max_length", std::to_string(c.max_length)},
      {"instance_cap", std::to_string(c.instance_cap)},
      {"train_ratio", format_double(c.train_ratio)},
      {"val_fraction", format_double(c.val_fraction)},
      {"link_test_fraction", format_double(c.link_test_fraction)},
      {"log_wall_time", c.log_wall_time ? "true" : "false"},
      {"threads", std::to_string(c.threads)},
  };
}

TrainConfig apply_key_values(TrainConfig c, const std::map<std::string, std::string>& kv) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"nodes", [&](auto&, auto& v) { c.nodes = v; }},
      {"edges", [&](auto&, auto& v) { c.edges = v; }},
      {"task",
       [&](auto& k, auto& v) {
         if (v == "node_classification") {
           c.task = Task::node_classification;
         } else if (v == "link_prediction") {
           c.task = Task::link_prediction;
         } else {
           throw ConfigError("invalid value '" + v + "' for " + k);
         }
       }},
      {"target_type", [&](auto&, auto& v) { c.target_type = v; }},
      {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = parse_number<double>(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { c.weight_decay = parse_number<double>(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = parse_number<int>(k, v); }},
      {"patience", [&](auto& k, auto& v) { c.patience = parse_number<int>(k, v); }},
      {"dropout", [&](auto& k, auto& v) { c.dropout = parse_number<double>(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"lambda", [&](auto& k, auto& v) { c.lambda = parse_number<double>(k, v); }},
      {"tau", [&](auto& k, auto& v) { c.tau = parse_number<double>(k, v); }},
      {"contrastive_form",
       [&](auto& k, auto& v) {
         if (v == "info_nce") {
           c.contrastive_form = ContrastiveForm::info_nce;
         } else if (v == "paper_literal") {
           c.contrastive_form = ContrastiveForm::paper_literal;
         } else {
           throw ConfigError("invalid value '" + v + "' for " + k);
         }
       }},
      {"curvature_mode",
       [&](auto& k, auto& v) {
         if (v == "learned") {
           c.curvature_mode = CurvatureMode::learned;
         } else if (v == "euclidean") {
           c.curvature_mode = CurvatureMode::euclidean;
         } else {
           throw ConfigError("invalid value '" + v + "' for " + k);
         }
       }},
      {"heads", [&](auto& k, auto& v) { c.heads = parse_number<int>(k, v); }},
      {"metapath_dim", [&](auto& k, auto& v) { c.metapath_dim = parse_number<int>(k, v); }},
      {"node_dim", [&](auto& k, auto& v) { c.node_dim = parse_number<int>(k, v); }},
      {"output_dim", [&](auto& k, auto& v) { c.output_dim = parse_number<int>(k, v); }},
      {"max_length", [&](auto& k, auto& v) { c.max_length = parse_number<int>(k, v); }},
      {"instance_cap", [&](auto& k, auto& v) { c.instance_cap = parse_number<std::size_t>(k, v); }},
      {"train_ratio", [&](auto& k, auto& v) { c.train_ratio = parse_number<double>(k, v); }},
      {"val_fraction", [&](auto& k, auto& v) { c.val_fraction = parse_number<double>(k, v); }},
      {"link_test_fraction", [&](auto& k, auto& v) { c.link_test_fraction = parse_number<double>(k, v); }},
      {"log_wall_time", [&](auto& k, auto& v) { c.log_wall_time = parse_bool(k, v); }},
      {"threads", [&](auto& k, auto& v) { c.threads = parse_number<unsigned>(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.filename().string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_value_file(const std::filesystem::path& path, const std::map<std::string, std::string>& kv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

}  // namespace mhcl
