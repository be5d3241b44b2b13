#include "ntnsim/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ntnsim/error.hpp"

namespace ntnsim {

std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::fsma: return "fsma";
        case Protocol::aloha: return "aloha";
        case Protocol::csma: return "csma";
        case Protocol::bsma: return "bsma";
    }
    return "?";
}

void Scenario::validate() const {
    lora.validate();
    if (protocol == Protocol::fsma && chirp_sf >= lora.sf)
        throw ConfigError("lora.chirp_sf: must be below lora.sf for fsma");
    if (chirp_sf < 7 || chirp_sf > 12)
        throw ConfigError("lora.chirp_sf: must be in [7,12]");
    if (total_time_s <= 0)
        throw ConfigError("total_time_s: must be > 0");
    traffic().validate();
    if (node_count < 0)
        throw ConfigError("nodes.count: must be >= 0");
    if (!explicit_positions.empty()) {
        if (node_count != static_cast<int>(explicit_positions.size()))
            throw ConfigError("nodes.count: does not match the explicit position list");
        for (const auto& p : explicit_positions) p.validate();
    } else if (node_count > 0) {
        region.validate();
    }
    link.validate();
    energy.validate();
    capture.validate();
    if (hearing_range_m < 0)
        throw ConfigError("mac.hearing_range_m: must be >= 0");
    if (cad_margin_db < 0)
        throw ConfigError("mac.cad_margin_db: must be >= 0");
    if (cad_overhead_symbols < 0)
        throw ConfigError("mac.cad_overhead_symbols: must be >= 0");
    if (turnaround_s < 0)
        throw ConfigError("mac.turnaround_s: must be >= 0");
    if (bsma_tone_sf < 7 || bsma_tone_sf > 12)
        throw ConfigError("mac.bsma_tone_sf: must be in [7,12]");
    for (std::size_t i = 1; i < demod_snr_db.size(); ++i)
        if (demod_snr_db[i] >= demod_snr_db[i - 1])
            throw ConfigError(
                "link.demod_snr_thresholds_db: must decrease monotonically with SF");
    if (std::holds_alternative<DroneLoop>(gateway.model))
        std::get<DroneLoop>(gateway.model).validate();
}

void apply_protocol_token(Scenario& sc, const std::string& token) {
    if (token == "fsma") { sc.protocol = Protocol::fsma; return; }
    if (token == "aloha") { sc.protocol = Protocol::aloha; return; }
    if (token == "bsma") { sc.protocol = Protocol::bsma; return; }
    if (token == "csma") { sc.protocol = Protocol::csma; return; }
    if (token.rfind("csma-", 0) == 0 && token.size() > 7 &&
        token.compare(token.size() - 2, 2, "km") == 0) {
        char* end = nullptr;
        double km = std::strtod(token.c_str() + 5, &end);
        if (end == token.c_str() + token.size() - 2 && km > 0) {
            sc.protocol = Protocol::csma;
            sc.hearing_range_m = km * 1000.0;
            return;
        }
    }
    throw ConfigError("protocol: unknown selector '" + token +
                      "' (expected fsma|aloha|bsma|csma|csma-<N>km)");
}

// ------------------------------------------------------------- ini reader --

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    Reader(const std::string& text, const std::string& origin) : origin_(origin) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        std::string section;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string s = strip_comment(line);
            std::string t = trim(s);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    fail(lineno, "malformed section header '" + t + "'");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                fail(lineno, "expected key = value, got '" + t + "'");
            std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            std::string full = section.empty() ? key : section + "." + key;
            if (kv_.count(full))
                fail(lineno, "duplicate key '" + full + "'");
            kv_[full] = Entry{value, lineno};
        }
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& def) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        return it->second.value;
    }

    std::string require_string(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end())
            throw ConfigError(origin_ + ": missing required key '" + key + "'");
        used_.insert(key);
        return it->second.value;
    }

    double get_double(const std::string& key, double def) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        return to_double(*it);
    }

    double require_double(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end())
            throw ConfigError(origin_ + ": missing required key '" + key + "'");
        used_.insert(key);
        return to_double(*it);
    }

    std::int64_t get_int(const std::string& key, std::int64_t def) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        const Entry& e = it->second;
        char* end = nullptr;
        long long v = std::strtoll(e.value.c_str(), &end, 10);
        if (!end || *end != '\0')
            fail(e.line, "key '" + it->first + "': expected integer, got '" + e.value + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool def) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        const std::string& v = it->second.value;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(it->second.line, "key '" + it->first + "': expected boolean, got '" + v + "'");
        return def;
    }

    int line_of(const std::string& key) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? 0 : it->second.line;
    }

    /// Every key must have been consumed by now.
    void finish() const {
        for (const auto& [key, e] : kv_) {
            if (!used_.count(key))
                fail(e.line, "unknown key '" + key + "'");
        }
    }

private:
    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(origin_ + " line " + std::to_string(line) + ": " + msg);
    }

    double to_double(const std::pair<const std::string, Entry>& kv) const {
        char* end = nullptr;
        double v = std::strtod(kv.second.value.c_str(), &end);
        if (!end || *end != '\0')
            fail(kv.second.line,
                 "key '" + kv.first + "': expected number, got '" + kv.second.value + "'");
        return v;
    }

    static std::string strip_comment(const std::string& s) {
        auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    std::string origin_;
    std::map<std::string, Entry> kv_;
    mutable std::set<std::string> used_;
};

std::vector<GeoPos> parse_position_list(const std::string& text, const std::string& origin,
                                        int line) {
    std::vector<GeoPos> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        std::istringstream pair(item);
        double lat, lon;
        char comma;
        if (!(pair >> lat >> comma >> lon) || comma != ',')
            throw ConfigError(origin + " line " + std::to_string(line) +
                              ": positions entries must be 'lat,lon'");
        out.push_back(GeoPos{lat, lon, 0.0});
    }
    return out;
}

DroneLoop square_loop(double center_lat_deg, double center_lon_deg, double alt_m,
                      double side_m, double speed_mps) {
    double dlat = (side_m / 2.0) / (kEarthRadiusM * kPi / 180.0);
    double dlon = dlat / std::cos(deg2rad(center_lat_deg));
    DroneLoop loop;
    loop.speed_mps = speed_mps;
    loop.waypoints = {
        GeoPos{center_lat_deg - dlat, center_lon_deg - dlon, alt_m},
        GeoPos{center_lat_deg - dlat, center_lon_deg + dlon, alt_m},
        GeoPos{center_lat_deg + dlat, center_lon_deg + dlon, alt_m},
        GeoPos{center_lat_deg + dlat, center_lon_deg - dlon, alt_m},
    };
    return loop;
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Reader r(text, origin);
    Scenario sc;

    sc.id = r.get_string("id", "scenario");
    sc.seed = static_cast<std::uint64_t>(r.get_int("seed", 1));
    sc.total_time_s = r.get_double("total_time_s", 600.0);
    std::string proto = r.get_string("protocol", "fsma");
    apply_protocol_token(sc, proto);

    sc.lora.sf = static_cast<int>(r.get_int("lora.sf", 10));
    sc.lora.bw_hz = r.get_int("lora.bw_hz", 125000);
    sc.lora.cr = static_cast<int>(r.get_int("lora.cr", 4));
    sc.lora.preamble_symbols = static_cast<int>(r.get_int("lora.preamble_symbols", 8));
    sc.lora.payload_bytes = static_cast<int>(r.get_int("lora.payload_bytes", 20));
    sc.lora.explicit_header = r.get_bool("lora.explicit_header", true);
    sc.lora.crc_in_airtime = r.get_bool("lora.crc_in_airtime", false);
    sc.lora.ldro = r.get_bool("lora.ldro", true);
    sc.chirp_sf = static_cast<int>(r.get_int("lora.chirp_sf", sc.lora.sf - 1));

    sc.duty_cycle = r.get_double("traffic.duty_cycle", 0.001);

    sc.node_count = static_cast<int>(r.get_int("nodes.count", 16));
    if (r.has("nodes.positions")) {
        int line = r.line_of("nodes.positions");
        sc.explicit_positions =
            parse_position_list(r.require_string("nodes.positions"), origin, line);
        sc.node_count = static_cast<int>(sc.explicit_positions.size());
    } else {
        sc.region.lat_min_deg = r.require_double("nodes.lat_min_deg");
        sc.region.lat_max_deg = r.require_double("nodes.lat_max_deg");
        sc.region.lon_min_deg = r.require_double("nodes.lon_min_deg");
        sc.region.lon_max_deg = r.require_double("nodes.lon_max_deg");
    }

    std::string mobility = r.get_string("gateway.mobility", "static");
    if (mobility == "static") {
        StaticPos s;
        s.pos.lat_deg = r.require_double("gateway.lat_deg");
        s.pos.lon_deg = r.require_double("gateway.lon_deg");
        s.pos.alt_m = r.get_double("gateway.alt_m", 100.0);
        sc.gateway.model = s;
    } else if (mobility == "drone_loop") {
        double alt = r.get_double("gateway.alt_m", 100.0);
        double speed = r.get_double("gateway.speed_mps", 10.0);
        if (r.has("gateway.waypoints")) {
            DroneLoop loop;
            loop.speed_mps = speed;
            int line = r.line_of("gateway.waypoints");
            for (GeoPos p : parse_position_list(r.require_string("gateway.waypoints"),
                                                origin, line)) {
                p.alt_m = alt;
                loop.waypoints.push_back(p);
            }
            sc.gateway.model = loop;
        } else {
            sc.gateway.model = square_loop(r.require_double("gateway.center_lat_deg"),
                                           r.require_double("gateway.center_lon_deg"), alt,
                                           r.get_double("gateway.side_m", 600.0), speed);
        }
    } else if (mobility == "tle") {
        TleOrbit orbit;
        orbit.elements =
            parse_tle(r.require_string("gateway.tle_line1"), r.require_string("gateway.tle_line2"));
        orbit.epoch_offset_s = r.get_double("gateway.epoch_offset_s", 0.0);
        sc.gateway.model = orbit;
    } else if (mobility == "ephemeris") {
        std::string path = r.require_string("gateway.file");
        std::ifstream in(path);
        if (!in)
            throw ConfigError(origin + ": gateway.file: cannot open '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        sc.gateway.model = parse_ephemeris_csv(buf.str());
    } else {
        throw ConfigError(origin + ": gateway.mobility: unknown mode '" + mobility +
                          "' (static|drone_loop|tle|ephemeris)");
    }

    sc.link.node_tx_power_dbm = r.get_double("link.node_tx_power_dbm", 22.0);
    sc.link.gateway_tx_power_dbm = r.get_double("link.gateway_tx_power_dbm", 22.0);
    sc.link.node_antenna_gain_dbi = r.get_double("link.node_antenna_gain_dbi", 2.15);
    sc.link.gateway_antenna_gain_dbi = r.get_double("link.gateway_antenna_gain_dbi", 2.15);
    sc.link.carrier_hz = r.get_double("link.carrier_hz", 430e6);
    sc.link.noise_figure_db = r.get_double("link.noise_figure_db", 6.0);
    sc.link.shadowing_sigma_db = r.get_double("link.shadowing_sigma_db", 0.0);
    sc.link.shadow_epoch_s = r.get_double("link.shadow_epoch_s", 10.0);
    sc.link.extra_attenuation_db = r.get_double("link.extra_attenuation_db", 0.0);
    if (r.has("link.demod_snr_thresholds_db")) {
        int line = r.line_of("link.demod_snr_thresholds_db");
        std::istringstream vals(r.require_string("link.demod_snr_thresholds_db"));
        std::string item;
        std::size_t i = 0;
        while (std::getline(vals, item, ',')) {
            char* end = nullptr;
            double v = std::strtod(item.c_str(), &end);
            if (!end || *end != '\0' || i >= 6)
                throw ConfigError(origin + " line " + std::to_string(line) +
                                  ": link.demod_snr_thresholds_db needs 6 numbers (SF7..SF12)");
            sc.demod_snr_db[i++] = v;
        }
        if (i != 6)
            throw ConfigError(origin + " line " + std::to_string(line) +
                              ": link.demod_snr_thresholds_db needs 6 numbers (SF7..SF12)");
    }

    sc.hearing_range_m = r.get_double("mac.hearing_range_m", sc.hearing_range_m);
    sc.min_elevation_deg = r.get_double("mac.min_elevation_deg", 10.0);
    sc.cad_margin_db = r.get_double("mac.cad_margin_db", 1.5);
    sc.cad_overhead_symbols = r.get_double("mac.cad_overhead_symbols", 0.5);
    sc.turnaround_s = r.get_double("mac.turnaround_s", 0.0);
    sc.bsma_tone_sf = static_cast<int>(r.get_int("mac.bsma_tone_sf", 10));

    sc.energy.node_tx_w = r.get_double("energy.node_tx_w", 0.4);
    sc.energy.node_rx_cad_w = r.get_double("energy.node_rx_cad_w", 0.05);
    sc.energy.node_sleep_w = r.get_double("energy.node_sleep_w", 1e-6);
    sc.energy.gateway_chirp_w = r.get_double("energy.gateway_chirp_w", 0.4);
    sc.energy.gateway_tone_w = r.get_double("energy.gateway_tone_w", 0.4);

    sc.capture.capture_threshold_db = r.get_double("capture.threshold_db", 1.0);
    sc.capture.lock_window_symbols =
        static_cast<int>(r.get_int("capture.lock_window_symbols", 4));
    sc.capture.preamble_detect_symbols_min =
        static_cast<int>(r.get_int("capture.preamble_detect_symbols_min", 3));
    sc.capture.preamble_detect_symbols_max =
        static_cast<int>(r.get_int("capture.preamble_detect_symbols_max", 5));

    r.finish();
    sc.validate();
    return sc;
}

// ----------------------------------------------------------------- presets --

namespace {

// Desk-scale static gateway: 16 nodes around an elevated gateway, strong
// links, duty set for 100% offered network load (16 x 6.25%).
const char* kStatic16 = R"(# static gateway, 16 nodes
id = static-16
protocol = fsma
seed = 1
total_time_s = 600

[lora]
sf = 10
bw_hz = 125000
cr = 4
payload_bytes = 20
chirp_sf = 9

[traffic]
duty_cycle = 0.0625

[nodes]
count = 16
lat_min_deg = 32.600
lat_max_deg = 32.640
lon_min_deg = -117.220
lon_max_deg = -117.180

[gateway]
mobility = static
lat_deg = 32.620
lon_deg = -117.200
alt_m = 100

[link]
carrier_hz = 430000000
extra_attenuation_db = 0

[mac]
min_elevation_deg = 0
# both tx and rx paths run through attenuators on the bench: nodes cannot
# hear each other even at desk ranges
hearing_range_m = 0
)";

// Campus-scale drone loop: 25 nodes over roughly 1 km, gateway completing a
// 2400 m loop in 4 minutes at 10 m/s.
const char* kDrone25 = R"(# moving gateway (drone), 25 nodes
id = drone-25
protocol = fsma
seed = 1
total_time_s = 600

[lora]
sf = 10
bw_hz = 125000
cr = 4
payload_bytes = 20
chirp_sf = 9

[traffic]
duty_cycle = 0.04

[nodes]
count = 25
lat_min_deg = 32.8755
lat_max_deg = 32.8845
lon_min_deg = -117.2415
lon_max_deg = -117.2305

[gateway]
mobility = drone_loop
center_lat_deg = 32.8800
center_lon_deg = -117.2360
alt_m = 100
side_m = 600
speed_mps = 10

[link]
carrier_hz = 430000000

[mac]
min_elevation_deg = 0
)";

// LEO pass: two-body orbit from a representative TLE (~567 km, 53 deg),
// nodes over a western-North-America box sized so the pass sweeps coverage
// across the region within the 600 s window.
const char* kLeoPass = R"(# LEO satellite pass, wide-area deployment
id = leo-pass
protocol = fsma
seed = 1
total_time_s = 600

[lora]
sf = 10
bw_hz = 125000
cr = 4
payload_bytes = 20
chirp_sf = 9

[traffic]
duty_cycle = 0.001

[nodes]
count = 2000
lat_min_deg = 32.0
lat_max_deg = 48.0
lon_min_deg = -125.0
lon_max_deg = -105.0

[gateway]
mobility = tle
tle_line1 = 1 99901U 26001A   26001.00000000  .00000000  00000-0  00000-0 0  9996
tle_line2 = 2 99901  53.0000 207.0329 0001000  90.0000 304.8215 15.02000000 12342
epoch_offset_s = 0

[link]
carrier_hz = 430000000
shadowing_sigma_db = 3
shadow_epoch_s = 10

[mac]
min_elevation_deg = 10
)";

} // namespace

std::vector<std::string> preset_names() { return {"static-16", "drone-25", "leo-pass"}; }

std::string preset_text(const std::string& name) {
    if (name == "static-16") return kStatic16;
    if (name == "drone-25") return kDrone25;
    if (name == "leo-pass") return kLeoPass;
    throw ConfigError("preset: unknown name '" + name + "'");
}

Scenario load_scenario(const std::string& name_or_path) {
    for (const auto& p : preset_names()) {
        if (name_or_path == p) return parse_scenario(preset_text(p), p);
    }
    std::ifstream in(name_or_path);
    if (!in)
        throw ConfigError("load_scenario: no preset or file named '" + name_or_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), name_or_path);
}

} // namespace ntnsim
