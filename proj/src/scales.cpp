#include "chronoscale/scales.hpp"

#include "chronoscale/error.hpp"

#include <cmath>
#include <sstream>

namespace chronoscale {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "scale descriptor: cannot parse " + what + " '" + text + "'");
  }
}

double endpoint(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_null()) return kInf;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  fail(ErrorKind::InvalidArgument, "scale descriptor: bad endpoint " + v.dump());
}

std::vector<Segment> segment_list(const nlohmann::json& arr) {
  if (!arr.is_array()) fail(ErrorKind::InvalidArgument, "scale descriptor: segments must be an array");
  std::vector<Segment> out;
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2) {
      fail(ErrorKind::InvalidArgument, "scale descriptor: each segment is a pair [a, b]");
    }
    out.push_back({endpoint(item[0]), endpoint(item[1])});
  }
  return out;
}

std::shared_ptr<const SegmentGenerator> tower3_generator() {
  return make_sequence_generator(
      [](std::int64_t n) { return n > 10 ? kInf : std::pow(3.0, std::pow(3.0, double(n))); }, 0,
      "tower3");
}

std::shared_ptr<const SegmentGenerator> geometric_generator(double q) {
  if (!(q > 1.0)) fail(ErrorKind::InvalidArgument, "geometric scale needs q > 1");
  return make_sequence_generator([q](std::int64_t n) { return std::pow(q, double(n)); }, 0,
                                 "geometric:" + std::to_string(q));
}

std::shared_ptr<const SegmentGenerator> builtin_sequence(const std::string& name) {
  if (name == "tower3") return tower3_generator();
  if (name.rfind("geometric", 0) == 0) {
    const auto parts = split(name, ':');
    return geometric_generator(parts.size() > 1 ? parse_number(parts[1], "q") : 2.0);
  }
  fail(ErrorKind::InvalidArgument, "unknown sequence builtin '" + name + "'");
}

}  // namespace

TimeScale real_line() { return TimeScale({{-kInf, kInf}}); }

TimeScale integers(double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "integers:h needs h > 0");
  return TimeScale({}, make_periodic_generator({{0.0, 0.0}}, h, 0.0, std::nullopt));
}

TimeScale naturals(double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "naturals:h needs h > 0");
  return TimeScale({}, make_periodic_generator({{0.0, 0.0}}, h, 0.0, 0));
}

TimeScale union_scale() {
  return TimeScale({{0.0, 1.0}}, make_periodic_generator({{0.0, 0.0}}, 1.0, 2.0, 0));
}

TimeScale geometric(double q) { return TimeScale({}, geometric_generator(q)); }

TimeScale tower3() { return TimeScale({}, tower3_generator()); }

TimeScale random_syndetic(std::uint64_t seed, double mu_max) {
  return TimeScale({}, make_random_syndetic_generator(seed, mu_max, 0.0));
}

TimeScale parse_scale(const std::string& descriptor) {
  const auto first = descriptor.find_first_not_of(" \t\n");
  if (first != std::string::npos && descriptor[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(descriptor);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::InvalidArgument, std::string("scale descriptor: ") + e.what());
    }
    return scale_from_json(j);
  }
  const auto colon = descriptor.find(':');
  const std::string name = descriptor.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
  if (name == "real") return real_line();
  if (name == "integers") return integers(args.empty() ? 1.0 : parse_number(args, "h"));
  if (name == "naturals") return naturals(args.empty() ? 1.0 : parse_number(args, "h"));
  if (name == "union") return union_scale();
  if (name == "geometric") return geometric(args.empty() ? 2.0 : parse_number(args, "q"));
  if (name == "tower3") return tower3();
  if (name == "random-syndetic") {
    const auto parts = split(args, ',');
    if (parts.size() != 2) {
      fail(ErrorKind::InvalidArgument, "random-syndetic expects 'seed,mu_max'");
    }
    const double seed = parse_number(parts[0], "seed");
    if (seed < 0 || seed != std::floor(seed)) {
      fail(ErrorKind::InvalidArgument, "random-syndetic seed must be a non-negative integer");
    }
    return random_syndetic(static_cast<std::uint64_t>(seed), parse_number(parts[1], "mu_max"));
  }
  fail(ErrorKind::InvalidArgument, "unknown time scale '" + descriptor + "'");
}

TimeScale scale_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_scale(j.get<std::string>());
  if (!j.is_object()) fail(ErrorKind::InvalidArgument, "scale descriptor must be an object");
  if (j.contains("name")) return parse_scale(j.at("name").get<std::string>());

  std::vector<Segment> segments;
  if (j.contains("segments")) segments = segment_list(j.at("segments"));
  std::shared_ptr<const SegmentGenerator> tail;
  if (j.contains("pattern")) {
    const auto& pat = j.at("pattern");
    const std::string kind = pat.value("kind", "");
    if (kind == "periodic") {
      const double period = pat.at("period").get<double>();
      const double start = pat.value("start", 0.0);
      std::vector<Segment> cell =
          pat.contains("cell") ? segment_list(pat.at("cell")) : std::vector<Segment>{{0.0, 0.0}};
      tail = make_periodic_generator(std::move(cell), period, start, 0);
    } else if (kind == "sequence") {
      if (pat.contains("builtin")) {
        tail = builtin_sequence(pat.at("builtin").get<std::string>());
      } else {
        for (const auto& p : pat.at("points")) {
          const double v = endpoint(p);
          segments.push_back({v, v});
        }
      }
    } else {
      fail(ErrorKind::InvalidArgument, "scale pattern kind must be 'periodic' or 'sequence'");
    }
  }
  if (!tail) return canonicalize(std::move(segments));
  if (segments.empty()) return TimeScale({}, tail);
  return TimeScale(canonicalize(std::move(segments)).segments(), tail);
}

nlohmann::json scale_catalog() {
  using nlohmann::json;
  return json::array({
      json{{"name", "real"}, {"params", json::array()}, {"doc", "the real line"}},
      json{{"name", "integers"},
           {"params", json::array({"h (default 1)"})},
           {"doc", "hZ, all integer multiples of h"}},
      json{{"name", "naturals"},
           {"params", json::array({"h (default 1)"})},
           {"doc", "h{0,1,2,...}"}},
      json{{"name", "union"}, {"params", json::array()}, {"doc", "[0,1] plus {2,3,4,...}"}},
      json{{"name", "geometric"},
           {"params", json::array({"q > 1 (default 2)"})},
           {"doc", "{q^n : n >= 0}; gaps grow without bound"}},
      json{{"name", "tower3"},
           {"params", json::array()},
           {"doc", "{3^(3^n) : n >= 0}; not syndetic"}},
      json{{"name", "random-syndetic"},
           {"params", json::array({"seed (integer)", "mu_max > 0"})},
           {"doc", "deterministic random points and intervals with gaps <= mu_max"}},
  });
}

}  // namespace chronoscale
