#include "ntnsim/geo.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "ntnsim/error.hpp"

namespace ntnsim {

void GeoPos::validate() const {
    if (lat_deg < -90.0 || lat_deg > 90.0)
        throw ConfigError("position.lat_deg: must be in [-90,90], got " + std::to_string(lat_deg));
    if (lon_deg < -180.0 || lon_deg > 180.0)
        throw ConfigError("position.lon_deg: must be in [-180,180], got " + std::to_string(lon_deg));
}

Vec3 geo_to_ecef(const GeoPos& p) {
    double r = kEarthRadiusM + p.alt_m;
    double lat = deg2rad(p.lat_deg), lon = deg2rad(p.lon_deg);
    return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon),
            r * std::sin(lat)};
}

GeoPos ecef_to_geo(const Vec3& v) {
    double r = v.norm();
    GeoPos p;
    p.lat_deg = rad2deg(std::asin(v.z / r));
    p.lon_deg = rad2deg(std::atan2(v.y, v.x));
    p.alt_m = r - kEarthRadiusM;
    return p;
}

SlantRange slant_range(const GeoPos& a, const GeoPos& b) {
    Vec3 va = geo_to_ecef(a), vb = geo_to_ecef(b);
    Vec3 d = vb - va;
    SlantRange s;
    s.distance_m = d.norm();
    if (s.distance_m == 0.0) {
        s.elevation_deg = 90.0;
        return s;
    }
    // Spherical Earth: local up at a is the radial direction.
    double up = d.dot(va) / (s.distance_m * va.norm());
    s.elevation_deg = rad2deg(std::asin(std::clamp(up, -1.0, 1.0)));
    return s;
}

// ---------------------------------------------------------------- orbits --

double OrbitalElements::semi_major_axis_m() const {
    double n = mean_motion_rev_day * 2.0 * kPi / 86400.0;  // rad/s
    return std::cbrt(kMuEarth / (n * n));
}

int tle_checksum(const std::string& line) {
    int sum = 0;
    for (std::size_t i = 0; i + 1 < line.size() && i < 68; ++i) {
        char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        else if (c == '-') sum += 1;
    }
    return sum % 10;
}

namespace {

void check_line(const std::string& line, int which, char lead) {
    if (line.size() != 69)
        throw ParseError("TLE line " + std::to_string(which) + ": expected 69 characters, got " +
                         std::to_string(line.size()));
    if (line[0] != lead)
        throw ParseError("TLE line " + std::to_string(which) + " col 1: expected '" +
                         std::string(1, lead) + "'");
    int want = line[68] - '0';
    int got = tle_checksum(line);
    if (want < 0 || want > 9 || got != want)
        throw ParseError("TLE line " + std::to_string(which) + " col 69: checksum mismatch (computed " +
                         std::to_string(got) + ", found '" + std::string(1, line[68]) + "')");
}

// Columns are 1-based, [first, last] inclusive as in the TLE reference layout.
double parse_field(const std::string& line, int which, int first, int last, const char* name) {
    std::string s = line.substr(first - 1, last - first + 1);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    // allow trailing spaces only
    while (end && *end == ' ') ++end;
    if (!end || *end != '\0')
        throw ParseError("TLE line " + std::to_string(which) + " col " + std::to_string(first) +
                         ": cannot parse " + name + " from '" + s + "'");
    return v;
}

} // namespace

OrbitalElements parse_tle(const std::string& line1, const std::string& line2) {
    check_line(line1, 1, '1');
    check_line(line2, 2, '2');

    OrbitalElements el;
    int yy = static_cast<int>(parse_field(line1, 1, 19, 20, "epoch year"));
    el.epoch_year = yy < 57 ? 2000 + yy : 1900 + yy;
    el.epoch_day = parse_field(line1, 1, 21, 32, "epoch day");
    el.catalog_number = static_cast<int>(parse_field(line2, 2, 3, 7, "catalog number"));
    el.inclination_deg = parse_field(line2, 2, 9, 16, "inclination");
    el.raan_deg = parse_field(line2, 2, 18, 25, "raan");
    el.eccentricity = parse_field(line2, 2, 27, 33, "eccentricity") * 1e-7;  // implied decimal
    el.arg_perigee_deg = parse_field(line2, 2, 35, 42, "argument of perigee");
    el.mean_anomaly_deg = parse_field(line2, 2, 44, 51, "mean anomaly");
    el.mean_motion_rev_day = parse_field(line2, 2, 53, 63, "mean motion");

    if (el.eccentricity < 0.0 || el.eccentricity >= 1.0)
        throw ParseError("TLE line 2 col 27: eccentricity out of [0,1)");
    if (el.mean_motion_rev_day <= 0.0)
        throw ParseError("TLE line 2 col 53: mean motion must be positive");
    return el;
}

namespace {

double solve_kepler(double mean_anomaly_rad, double e) {
    double m = std::remainder(mean_anomaly_rad, 2.0 * kPi);
    double E = (e < 0.8) ? m : kPi;
    for (int it = 0; it < 50; ++it) {
        double f = E - e * std::sin(E) - m;
        double fp = 1.0 - e * std::cos(E);
        double step = f / fp;
        E -= step;
        if (std::abs(step) < 1e-10) break;
    }
    return E;
}

} // namespace

Vec3 propagate_eci(const OrbitalElements& el, double t) {
    double n = el.mean_motion_rev_day * 2.0 * kPi / 86400.0;
    double a = el.semi_major_axis_m();
    double e = el.eccentricity;
    double M = deg2rad(el.mean_anomaly_deg) + n * t;
    double E = solve_kepler(M, e);

    double nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(E / 2.0),
                                 std::sqrt(1.0 - e) * std::cos(E / 2.0));
    double r = a * (1.0 - e * std::cos(E));
    double xp = r * std::cos(nu), yp = r * std::sin(nu);  // perifocal

    double ci = std::cos(deg2rad(el.inclination_deg)), si = std::sin(deg2rad(el.inclination_deg));
    double co = std::cos(deg2rad(el.raan_deg)), so = std::sin(deg2rad(el.raan_deg));
    double cw = std::cos(deg2rad(el.arg_perigee_deg)), sw = std::sin(deg2rad(el.arg_perigee_deg));

    // Rz(-raan) Rx(-incl) Rz(-argp), rows written out.
    Vec3 v;
    v.x = (co * cw - so * sw * ci) * xp + (-co * sw - so * cw * ci) * yp;
    v.y = (so * cw + co * sw * ci) * xp + (-so * sw + co * cw * ci) * yp;
    v.z = (sw * si) * xp + (cw * si) * yp;
    return v;
}

GeoPos propagate(const OrbitalElements& el, double t) {
    if (std::abs(t) > 7.0 * 86400.0)
        throw ConfigError("propagate: t outside the +-7 day validity window around the epoch");
    Vec3 eci = propagate_eci(el, t);
    double theta = deg2rad(kEarthRotDegPerDay) / 86400.0 * t;  // Earth rotation since epoch
    Vec3 ecef{eci.x * std::cos(theta) + eci.y * std::sin(theta),
              -eci.x * std::sin(theta) + eci.y * std::cos(theta), eci.z};
    return ecef_to_geo(ecef);
}

// ------------------------------------------------------------- mobility --

void Region::validate() const {
    if (lat_min_deg >= lat_max_deg || lon_min_deg >= lon_max_deg)
        throw ConfigError("region: degenerate bounds (min must be < max)");
    GeoPos{lat_min_deg, lon_min_deg, 0}.validate();
    GeoPos{lat_max_deg, lon_max_deg, 0}.validate();
}

std::vector<GeoPos> deploy_nodes(const Region& region, int n, RngStream& rng) {
    region.validate();
    if (n < 1)
        throw ConfigError("deploy_nodes: n must be >= 1");
    std::vector<GeoPos> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        GeoPos p;
        p.lat_deg = rng.uniform(region.lat_min_deg, region.lat_max_deg);
        p.lon_deg = rng.uniform(region.lon_min_deg, region.lon_max_deg);
        p.alt_m = 0.0;
        out.push_back(p);
    }
    return out;
}

void DroneLoop::validate() const {
    if (waypoints.size() < 2)
        throw ConfigError("drone_loop: need at least 2 waypoints");
    if (speed_mps <= 0)
        throw ConfigError("drone_loop: speed must be > 0");
    if (loop_length_m() <= 0)
        throw ConfigError("drone_loop: zero-length path");
}

double DroneLoop::loop_length_m() const {
    double total = 0.0;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        const GeoPos& a = waypoints[i];
        const GeoPos& b = waypoints[(i + 1) % waypoints.size()];
        total += (geo_to_ecef(b) - geo_to_ecef(a)).norm();
    }
    return total;
}

GeoPos drone_position(const DroneLoop& loop, double t_s) {
    loop.validate();
    double total = loop.loop_length_m();
    double s = std::fmod(loop.speed_mps * t_s, total);
    if (s < 0) s += total;
    for (std::size_t i = 0; i < loop.waypoints.size(); ++i) {
        const GeoPos& a = loop.waypoints[i];
        const GeoPos& b = loop.waypoints[(i + 1) % loop.waypoints.size()];
        double seg = (geo_to_ecef(b) - geo_to_ecef(a)).norm();
        if (s <= seg || i + 1 == loop.waypoints.size()) {
            double f = (seg > 0) ? s / seg : 0.0;
            return GeoPos{a.lat_deg + f * (b.lat_deg - a.lat_deg),
                          a.lon_deg + f * (b.lon_deg - a.lon_deg),
                          a.alt_m + f * (b.alt_m - a.alt_m)};
        }
        s -= seg;
    }
    return loop.waypoints.front();
}

GeoPos EphemerisTrace::position_at(double t) const {
    if (t_s.empty())
        throw ConfigError("ephemeris: empty trace");
    if (t < t_s.front() || t > t_s.back())
        throw ConfigError("ephemeris: t=" + std::to_string(t) + " outside trace range");
    auto it = std::lower_bound(t_s.begin(), t_s.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - t_s.begin());
    if (hi == 0) return positions.front();
    std::size_t lo = hi - 1;
    double f = (t - t_s[lo]) / (t_s[hi] - t_s[lo]);
    // Interpolate through ECEF so longitude wrap is handled cleanly.
    Vec3 v = geo_to_ecef(positions[lo]) * (1.0 - f) + geo_to_ecef(positions[hi]) * f;
    return ecef_to_geo(v);
}

EphemerisTrace parse_ephemeris_csv(const std::string& text) {
    EphemerisTrace tr;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "t_s,lat_deg,lon_deg,alt_m")
                throw ParseError("ephemeris line 1: expected header 't_s,lat_deg,lon_deg,alt_m'");
            continue;
        }
        std::istringstream row(line);
        double t, lat, lon, alt;
        char c1, c2, c3;
        if (!(row >> t >> c1 >> lat >> c2 >> lon >> c3 >> alt) || c1 != ',' || c2 != ',' ||
            c3 != ',')
            throw ParseError("ephemeris line " + std::to_string(lineno) + ": cannot parse row");
        if (!tr.t_s.empty() && t <= tr.t_s.back())
            throw ParseError("ephemeris line " + std::to_string(lineno) +
                             ": timestamps must be strictly increasing");
        tr.t_s.push_back(t);
        tr.positions.push_back(GeoPos{lat, lon, alt});
    }
    if (tr.t_s.empty())
        throw ParseError("ephemeris: no samples");
    return tr;
}

GeoPos MobilityModel::position_at(double t_s) const {
    return std::visit(
        [t_s](const auto& m) -> GeoPos {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, StaticPos>) return m.pos;
            else if constexpr (std::is_same_v<T, DroneLoop>) return drone_position(m, t_s);
            else if constexpr (std::is_same_v<T, TleOrbit>)
                return propagate(m.elements, m.epoch_offset_s + t_s);
            else return m.position_at(t_s);
        },
        model);
}

} // namespace ntnsim
