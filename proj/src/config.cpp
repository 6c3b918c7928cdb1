#include "config.hpp"

#include <stdexcept>

namespace shecov {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw std::invalid_argument("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in '" +
                                  where + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

} // namespace

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  expect_keys(j, "config", {"basis", "q", "scheme", "mc", "times", "inversion", "output"});

  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    expect_keys(b, "basis", {"dim", "K"});
    read_if(b, "dim", c.basis.dim);
    read_if(b, "K", c.basis.modes);
  }
  if (j.contains("q")) {
    const auto& q = j.at("q");
    expect_keys(q, "q", {"list", "family", "c", "s", "K"});
    if (q.contains("list")) {
      if (q.contains("family") || q.contains("c") || q.contains("s") || q.contains("K"))
        throw std::invalid_argument("config: q takes either 'list' or a power family, not both");
      c.q.list = q.at("list").get<std::vector<double>>();
    } else {
      if (q.contains("family") && q.at("family").get<std::string>() != "power")
        throw std::invalid_argument("config: the only supported q family is 'power'");
      read_if(q, "c", c.q.power_c);
      read_if(q, "s", c.q.power_s);
      if (q.contains("K")) c.q.power_truncation = q.at("K").get<int>();
    }
  }
  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    expect_keys(s, "scheme", {"kind", "dt"});
    if (s.contains("kind")) c.scheme.kind = scheme_kind_from_string(s.at("kind"));
    read_if(s, "dt", c.scheme.dt);
    if (!(c.scheme.dt > 0.0))
      throw std::invalid_argument("config: scheme.dt must be > 0");
  }
  if (j.contains("mc")) {
    const auto& m = j.at("mc");
    expect_keys(m, "mc", {"paths", "master_seed", "threads"});
    read_if(m, "paths", c.mc.paths);
    read_if(m, "master_seed", c.mc.master_seed);
    read_if(m, "threads", c.mc.threads);
    if (c.mc.paths < 2) throw std::invalid_argument("config: mc.paths must be >= 2");
  }
  if (j.contains("times")) {
    const auto& t = j.at("times");
    expect_keys(t, "times", {"t0", "grid"});
    read_if(t, "t0", c.times.t0);
    read_if(t, "grid", c.times.grid);
    if (!(c.times.t0 > 0.0)) throw std::invalid_argument("config: times.t0 must be > 0");
  }
  if (j.contains("inversion")) {
    const auto& i = j.at("inversion");
    expect_keys(i, "inversion", {"floor", "K_obs"});
    if (i.contains("floor")) {
      if (i.at("floor").is_string()) {
        if (i.at("floor").get<std::string>() != "auto")
          throw std::invalid_argument("config: inversion.floor must be a number or \"auto\"");
        c.inversion.floor = -1.0;
      } else {
        c.inversion.floor = i.at("floor").get<double>();
        if (c.inversion.floor < 0.0)
          throw std::invalid_argument("config: numeric inversion.floor must be >= 0");
      }
    }
    read_if(i, "K_obs", c.inversion.k_obs);
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    expect_keys(o, "output", {"dir", "formats"});
    read_if(o, "dir", c.output.dir);
    read_if(o, "formats", c.output.formats);
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json echo_config(const RunConfig& c) {
  json q;
  if (c.q.list) {
    q = json{{"list", *c.q.list}};
  } else {
    q = json{{"family", "power"},
             {"c", c.q.power_c},
             {"s", c.q.power_s},
             {"K", c.q.power_truncation.value_or(c.basis.modes)}};
  }
  return json{
      {"basis", {{"dim", c.basis.dim}, {"K", c.basis.modes}}},
      {"q", q},
      {"scheme", {{"kind", to_string(c.scheme.kind)}, {"dt", c.scheme.dt}}},
      {"mc",
       {{"paths", c.mc.paths}, {"master_seed", c.mc.master_seed}, {"threads", c.mc.threads}}},
      {"times", {{"t0", c.times.t0}, {"grid", c.times.grid}}},
      {"inversion",
       {{"floor", c.inversion.floor < 0.0 ? json("auto") : json(c.inversion.floor)},
        {"K_obs", c.inversion.k_obs}}},
      {"output", {{"dir", c.output.dir}, {"formats", c.output.formats}}}};
}

Basis make_basis(const RunConfig& c) { return Basis(c.basis.dim, c.basis.modes); }

QSpec make_qspec(const RunConfig& c) {
  if (c.q.list) return QSpec::from_list(*c.q.list);
  const int modes = c.basis.dim == 1 ? c.basis.modes : c.basis.modes * c.basis.modes;
  return QSpec::from_power(c.q.power_c, c.q.power_s,
                           c.q.power_truncation.value_or(modes));
}

nlohmann::json lambda_spec_json(const RunConfig& c) {
  if (c.q.list) return nlohmann::json{{"list", *c.q.list}};
  const int modes = c.basis.dim == 1 ? c.basis.modes : c.basis.modes * c.basis.modes;
  return nlohmann::json{{"family", "power"},
                        {"c", c.q.power_c},
                        {"s", c.q.power_s},
                        {"K", c.q.power_truncation.value_or(modes)}};
}

const char* version_string() {
#ifdef SHECOV_VERSION_STRING
  return SHECOV_VERSION_STRING;
#else
  return "0.0.0";
#endif
}

} // namespace shecov
