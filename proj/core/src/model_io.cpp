#include "reachlab/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

using nlohmann::json;

[[noreturn]] void shape_error(const std::string& message) {
  throw ValidationError({Violation{Violation::Kind::shape, -1, -1, message}});
}

json parse_document(std::string_view text) {
  try {
    auto doc = json::parse(text);
    if (!doc.is_object()) shape_error("top-level JSON value must be an object");
    return doc;
  } catch (const json::parse_error& e) {
    shape_error(std::string("invalid JSON: ") + e.what());
  }
}

std::size_t get_index(const json& doc, const char* key) {
  if (!doc.contains(key)) shape_error(std::string("missing field '") + key + "'");
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    shape_error(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double get_number(const json& v, const std::string& what) {
  if (!v.is_number()) shape_error(what + " must be a number");
  return v.get<double>();
}

}  // namespace

MarkovModel parse_markov_model(std::string_view json_text) {
  const auto doc = parse_document(json_text);
  const std::size_t n = get_index(doc, "n_states");
  if (!doc.contains("transition") || !doc.at("transition").is_array())
    shape_error("missing array field 'transition'");
  const auto& tr = doc.at("transition");

  std::vector<double> flat;
  if (!tr.empty() && tr.front().is_array()) {
    if (tr.size() != n)
      shape_error("transition has " + std::to_string(tr.size()) + " rows, expected " +
                  std::to_string(n));
    for (std::size_t r = 0; r < tr.size(); ++r) {
      if (!tr[r].is_array() || tr[r].size() != n)
        shape_error("transition row " + std::to_string(r) + " must have " + std::to_string(n) +
                    " entries");
      for (const auto& v : tr[r]) flat.push_back(get_number(v, "transition entries"));
    }
  } else {
    for (const auto& v : tr) flat.push_back(get_number(v, "transition entries"));
  }

  if (!doc.contains("horizon") || !doc.at("horizon").is_object())
    shape_error("missing object field 'horizon'");
  const auto& hz = doc.at("horizon");
  const std::size_t steps = get_index(hz, "max_steps");
  if (hz.contains("time_limit") && !hz.at("time_limit").is_null()) {
    const double limit = get_number(hz.at("time_limit"), "horizon time_limit");
    if (limit != static_cast<double>(steps))
      shape_error("Markov models count steps; horizon time_limit must equal max_steps");
  }

  MarkovModel model(n, std::move(flat), get_index(doc, "initial_state"),
                    get_index(doc, "outcome_state"), steps);
  require_valid(model);
  return model;
}

std::string markov_model_json(const MarkovModel& model) {
  json rows = json::array();
  for (std::size_t s = 0; s < model.n_states(); ++s) {
    const auto r = model.row(s);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  json doc{{"n_states", model.n_states()},
           {"transition", rows},
           {"initial_state", model.initial_state()},
           {"outcome_state", model.outcome_state()},
           {"horizon", {{"max_steps", model.steps()}, {"time_limit", model.steps()}}}};
  return doc.dump(2) + "\n";
}

ChainSpec parse_chain_spec(std::string_view json_text, ChainSpec base) {
  const auto doc = parse_document(json_text);
  ChainSpec spec = std::move(base);
  static const char* known[] = {"n_states", "spontaneity", "target_probability", "horizon_steps",
                                "seed",     "layout",      "hazard_scale"};
  for (const auto& [key, _] : doc.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      shape_error("unknown chain spec field '" + key + "'");
  if (doc.contains("n_states")) spec.n_states = get_index(doc, "n_states");
  if (doc.contains("horizon_steps")) spec.horizon_steps = get_index(doc, "horizon_steps");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) shape_error("seed must be a non-negative integer");
    spec.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("spontaneity")) spec.spontaneity = get_number(doc.at("spontaneity"), "spontaneity");
  if (doc.contains("hazard_scale"))
    spec.hazard_scale = get_number(doc.at("hazard_scale"), "hazard_scale");
  if (doc.contains("target_probability")) {
    if (doc.at("target_probability").is_null())
      spec.target_probability.reset();
    else
      spec.target_probability = get_number(doc.at("target_probability"), "target_probability");
  }
  if (doc.contains("layout")) {
    if (!doc.at("layout").is_string()) shape_error("layout must be a string");
    try {
      spec.layout = parse_chain_layout(doc.at("layout").get<std::string>());
    } catch (const InvalidArgument& e) {
      shape_error(e.what());
    }
  }
  return spec;
}

std::string chain_spec_json(const ChainSpec& spec) {
  json doc{{"n_states", spec.n_states},
           {"spontaneity", spec.spontaneity},
           {"target_probability",
            spec.target_probability ? json(*spec.target_probability) : json(nullptr)},
           {"horizon_steps", spec.horizon_steps},
           {"seed", spec.seed},
           {"layout", std::string(to_string(spec.layout))},
           {"hazard_scale", spec.hazard_scale}};
  return doc.dump(2) + "\n";
}

std::string trajectory_json_line(const Trajectory& traj, std::uint64_t seed, std::uint64_t index) {
  json doc{{"tokens", traj.tokens},
           {"hazards", traj.hazards},
           {"hit_index", traj.hit_index ? json(*traj.hit_index) : json(nullptr)},
           {"end_index", traj.end_index},
           {"mode", std::string(to_string(traj.mode))},
           {"degenerate", traj.degenerate},
           {"seed", seed},
           {"index", index}};
  return doc.dump();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("error while writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string encode_f64_le(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return bytes;
}

std::vector<double> decode_f64_le(std::string_view bytes) {
  if (bytes.size() % 8 != 0) throw InvalidArgument("byte count is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void write_f64_le(const std::filesystem::path& path, std::span<const double> values) {
  write_file_atomic(path, encode_f64_le(values));
}

std::vector<double> read_f64_le(const std::filesystem::path& path) {
  const auto bytes = read_text_file(path);
  if (bytes.size() % 8 != 0) throw IoError("'" + path.string() + "' is not a whole number of doubles");
  return decode_f64_le(bytes);
}

}  // namespace reachlab
