#pragma once

// INI-style configuration: `[section]` headers with `key = value` lines. Every
// key is optional; an empty file yields the default configuration. Unknown
// sections or keys are errors.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngo/engine.hpp"

namespace ngo {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError("config: '" + key + "' expects a number, got '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + s + "'");
}

struct ConfigKey {
  std::string section;
  std::string name;
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&)> set;
  std::string path() const { return section + "." + name; }
};

template <class Field>
ConfigKey real_key(std::string section, std::string name, Field field) {
  const std::string path = section + "." + name;
  return {std::move(section), std::move(name),
          [field](const SimConfig& c) { return format_double(field(const_cast<SimConfig&>(c))); },
          [field, path](SimConfig& c, const std::string& v) { field(c) = parse_double(path, v); }};
}

template <class Field>
ConfigKey int_key(std::string section, std::string name, Field field) {
  const std::string path = section + "." + name;
  return {std::move(section), std::move(name),
          [field](const SimConfig& c) { return std::to_string(field(const_cast<SimConfig&>(c))); },
          [field, path](SimConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(field(c))>;
            const long long x = parse_int(path, v);
            if constexpr (std::is_unsigned_v<T>) {
              if (x < 0) throw ConfigError("config: '" + path + "' must be >= 0");
            }
            field(c) = static_cast<T>(x);
          }};
}

template <class Field>
ConfigKey bool_key(std::string section, std::string name, Field field) {
  const std::string path = section + "." + name;
  return {std::move(section), std::move(name),
          [field](const SimConfig& c) { return std::string(field(const_cast<SimConfig&>(c)) ? "true" : "false"); },
          [field, path](SimConfig& c, const std::string& v) { field(c) = parse_bool(path, v); }};
}

}  // namespace detail

/// All recognized keys, in dump order.
inline const std::vector<detail::ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(int_key("scenario", "blocks_x", [](SimConfig& c) -> auto& { return c.grid.blocks_x; }));
    k.push_back(int_key("scenario", "blocks_y", [](SimConfig& c) -> auto& { return c.grid.blocks_y; }));
    k.push_back(real_key("scenario", "building_width", [](SimConfig& c) -> auto& { return c.grid.building_width; }));
    k.push_back(real_key("scenario", "street_width", [](SimConfig& c) -> auto& { return c.grid.street_width; }));
    k.push_back(real_key("scenario", "building_height", [](SimConfig& c) -> auto& { return c.grid.building_height; }));
    k.push_back(int_key("scenario", "floors", [](SimConfig& c) -> auto& { return c.grid.n_floors; }));
    k.push_back(real_key("scenario", "bs_x", [](SimConfig& c) -> auto& { return c.grid.bs_position.x; }));
    k.push_back(real_key("scenario", "bs_y", [](SimConfig& c) -> auto& { return c.grid.bs_position.y; }));
    k.push_back(real_key("scenario", "bs_height", [](SimConfig& c) -> auto& { return c.grid.bs_height; }));
    k.push_back(real_key("scenario", "tile_side", [](SimConfig& c) -> auto& { return c.grid.tile_side; }));
    k.push_back(real_key("scenario", "device_height", [](SimConfig& c) -> auto& { return c.grid.device_height; }));

    k.push_back(real_key("channel", "carrier_hz", [](SimConfig& c) -> auto& { return c.channel.carrier_hz; }));
    k.push_back(real_key("channel", "cell_los_exponent", [](SimConfig& c) -> auto& { return c.channel.cellular_los_exponent; }));
    k.push_back(real_key("channel", "cell_nlos_exponent", [](SimConfig& c) -> auto& { return c.channel.cellular_nlos_exponent; }));
    k.push_back(real_key("channel", "d2d_los_exponent", [](SimConfig& c) -> auto& { return c.channel.d2d_los_exponent; }));
    k.push_back(real_key("channel", "d2d_nlos_exponent", [](SimConfig& c) -> auto& { return c.channel.d2d_nlos_exponent; }));
    k.push_back(real_key("channel", "cell_ref_loss_db", [](SimConfig& c) -> auto& { return c.channel.reference_loss_1m_cell_db; }));
    k.push_back(real_key("channel", "d2d_ref_loss_db", [](SimConfig& c) -> auto& { return c.channel.reference_loss_1m_d2d_db; }));
    k.push_back(real_key("channel", "mcl_db", [](SimConfig& c) -> auto& { return c.channel.mcl_db; }));
    k.push_back(real_key("channel", "cell_margin_db", [](SimConfig& c) -> auto& { return c.channel.m_cell_db; }));
    k.push_back(real_key("channel", "d2d_margin_db", [](SimConfig& c) -> auto& { return c.channel.m_d2d_db; }));
    k.push_back(real_key("channel", "noise_psd_dbm_hz", [](SimConfig& c) -> auto& { return c.channel.noise_psd_dbm_hz; }));
    k.push_back(real_key("channel", "prb_bandwidth_hz", [](SimConfig& c) -> auto& { return c.channel.b_prb_hz; }));
    k.push_back(real_key("channel", "prb_duration_s", [](SimConfig& c) -> auto& { return c.channel.tau_prb_s; }));
    k.push_back(real_key("channel", "prbs_per_ci", [](SimConfig& c) -> auto& { return c.channel.n_u; }));
    k.push_back(real_key("channel", "d2d_range_m", [](SimConfig& c) -> auto& { return c.channel.r_d2d_m; }));

    k.push_back(int_key("traffic", "node_count", [](SimConfig& c) -> auto& { return c.node_count; }));
    k.push_back(real_key("traffic", "speed", [](SimConfig& c) -> auto& { return c.speed; }));
    k.push_back(real_key("traffic", "t_ci", [](SimConfig& c) -> auto& { return c.t_ci; }));
    k.push_back(real_key("traffic", "d_c", [](SimConfig& c) -> auto& { return c.d_c; }));
    k.push_back(real_key("traffic", "d_ci", [](SimConfig& c) -> auto& { return c.channel.d_ci_bits; }));
    k.push_back(real_key("traffic", "t_max", [](SimConfig& c) -> auto& { return c.t_max; }));
    k.push_back(real_key("traffic", "lambda_req", [](SimConfig& c) -> auto& { return c.lambda_req; }));

    k.push_back(real_key("sim", "duration", [](SimConfig& c) -> auto& { return c.sim_duration; }));
    k.push_back(int_key("sim", "runs", [](SimConfig& c) -> auto& { return c.runs; }));
    k.push_back(int_key("sim", "seed", [](SimConfig& c) -> auto& { return c.seed; }));
    k.push_back({"sim", "scheme", [](const SimConfig& c) { return std::string(to_string(c.scheme)); },
                 [](SimConfig& c, const std::string& v) {
                   try {
                     c.scheme = scheme_from_string(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("config: sim.scheme: ") + e.what());
                   }
                 }});
    k.push_back(int_key("sim", "hop_limit", [](SimConfig& c) -> auto& { return c.hop_limit; }));

    k.push_back(real_key("estimator", "window_mass", [](SimConfig& c) -> auto& { return c.estimator.window_mass; }));
    k.push_back(real_key("estimator", "p_empty_max", [](SimConfig& c) -> auto& { return c.estimator.p_empty_max; }));
    k.push_back({"estimator", "zero_relay",
                 [](const SimConfig& c) {
                   return std::string(c.estimator.zero_policy == ZeroRelayPolicy::kLiteral ? "literal" : "condition");
                 },
                 [](SimConfig& c, const std::string& v) {
                   if (v == "literal") c.estimator.zero_policy = ZeroRelayPolicy::kLiteral;
                   else if (v == "condition") c.estimator.zero_policy = ZeroRelayPolicy::kConditionOnNonEmpty;
                   else throw ConfigError("config: estimator.zero_relay expects 'condition' or 'literal'");
                 }});

    k.push_back({"estimator", "window_tail",
                 [](const SimConfig& c) {
                   return std::string(c.estimator.tail == WindowTail::kRenormalize ? "renormalize" : "fold");
                 },
                 [](SimConfig& c, const std::string& v) {
                   if (v == "fold") c.estimator.tail = WindowTail::kFold;
                   else if (v == "renormalize") c.estimator.tail = WindowTail::kRenormalize;
                   else throw ConfigError("config: estimator.window_tail expects 'fold' or 'renormalize'");
                 }});

    k.push_back(bool_key("adapt", "always_adopt_rt_mode", [](SimConfig& c) -> auto& { return c.adapt.always_adopt_rt_mode; }));
    k.push_back(bool_key("adapt", "refresh_estimates", [](SimConfig& c) -> auto& { return c.adapt.refresh_estimates; }));

    k.push_back(real_key("overhead", "local_map_bytes", [](SimConfig& c) -> auto& { return c.overhead.local_map_bytes; }));
    k.push_back(real_key("overhead", "cell_pl_map_bytes", [](SimConfig& c) -> auto& { return c.overhead.cell_pl_map_bytes; }));
    k.push_back(real_key("overhead", "d2d_pl_map_bytes", [](SimConfig& c) -> auto& { return c.overhead.d2d_pl_map_bytes; }));
    k.push_back(real_key("overhead", "broadcast_period_s", [](SimConfig& c) -> auto& { return c.overhead.broadcast_period_s; }));
    k.push_back(int_key("overhead", "discovery_messages", [](SimConfig& c) -> auto& { return c.overhead.discovery_messages; }));
    k.push_back(real_key("overhead", "discovery_message_bits", [](SimConfig& c) -> auto& { return c.overhead.discovery_message_bits; }));
    k.push_back(real_key("overhead", "energy_per_flop_j", [](SimConfig& c) -> auto& { return c.overhead.energy_per_flop_j; }));
    k.push_back({"overhead", "broadcast_gain_db",
                 [](const SimConfig& c) {
                   return c.overhead.broadcast_gain_db ? detail::format_double(*c.overhead.broadcast_gain_db) : std::string("auto");
                 },
                 [](SimConfig& c, const std::string& v) {
                   if (v == "auto") c.overhead.broadcast_gain_db.reset();
                   else c.overhead.broadcast_gain_db = detail::parse_double("overhead.broadcast_gain_db", v);
                 }});
    k.push_back(bool_key("overhead", "d2d_map_at_recipient_gain", [](SimConfig& c) -> auto& { return c.overhead.d2d_map_at_recipient_gain; }));
    k.push_back(bool_key("overhead", "include_maps", [](SimConfig& c) -> auto& { return c.overhead.include_maps; }));
    k.push_back(bool_key("overhead", "include_discovery", [](SimConfig& c) -> auto& { return c.overhead.include_discovery; }));
    k.push_back(bool_key("overhead", "include_cpu", [](SimConfig& c) -> auto& { return c.overhead.include_cpu; }));
    return k;
  }();
  return keys;
}

/// Applies one `section.key=value` override.
inline void set_config_value(SimConfig& cfg, const std::string& path, const std::string& value) {
  for (const auto& k : config_keys())
    if (k.path() == path) {
      k.set(cfg, value);
      return;
    }
  throw ConfigError("config: unknown key '" + path + "'");
}

inline std::string get_config_value(const SimConfig& cfg, const std::string& path) {
  for (const auto& k : config_keys())
    if (k.path() == path) return k.get(cfg);
  throw ConfigError("config: unknown key '" + path + "'");
}

inline SimConfig parse_config(std::istream& in, SimConfig base = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) set_config_value(base, section + "." + key, value.get_value<std::string>());
  }
  return base;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

/// Full configuration, every key explicit, parseable by parse_config.
inline std::string dump_config(const SimConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << k.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace ngo
