#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "ntnsim/rng.hpp"

namespace ntnsim {

inline constexpr double kEarthRadiusM = 6371e3;          // spherical Earth
inline constexpr double kMuEarth = 3.986004418e14;       // m^3/s^2
inline constexpr double kEarthRotDegPerDay = 360.9856;   // sidereal rate
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

struct GeoPos {
    double lat_deg = 0.0;   // [-90, 90]
    double lon_deg = 0.0;   // [-180, 180]
    double alt_m = 0.0;     // above mean sea level

    void validate() const;
};

Vec3 geo_to_ecef(const GeoPos& p);
GeoPos ecef_to_geo(const Vec3& v);

struct SlantRange {
    double distance_m = 0.0;
    double elevation_deg = 0.0;  // of b above a's local horizon
};

/// Straight-line range plus elevation angle from a toward b.
SlantRange slant_range(const GeoPos& a, const GeoPos& b);

// ---------------------------------------------------------------- orbits --

struct OrbitalElements {
    double inclination_deg = 0.0;
    double raan_deg = 0.0;
    double eccentricity = 0.0;
    double arg_perigee_deg = 0.0;
    double mean_anomaly_deg = 0.0;
    double mean_motion_rev_day = 0.0;
    int epoch_year = 2000;
    double epoch_day = 1.0;  // fractional day of year
    int catalog_number = 0;

    double period_s() const { return 86400.0 / mean_motion_rev_day; }
    double semi_major_axis_m() const;
};

/// Modulo-10 checksum over the first 68 columns ('-' counts as 1).
int tle_checksum(const std::string& line);

/// Parses the standard 69-column two-line element set; verifies both
/// checksums and reports bad fields with line and column.
OrbitalElements parse_tle(const std::string& line1, const std::string& line2);

/// Two-body position in the epoch-fixed inertial frame (for tests and
/// period/altitude checks).
Vec3 propagate_eci(const OrbitalElements& el, double t_since_epoch_s);

/// Geodetic position at t seconds after epoch. The inertial frame is aligned
/// with ECEF at the epoch; Earth rotates at 360.9856 deg/day thereafter.
/// Valid within +-7 days of epoch.
GeoPos propagate(const OrbitalElements& el, double t_since_epoch_s);

// ------------------------------------------------------------- mobility --

struct Region {
    double lat_min_deg = 0, lat_max_deg = 0;
    double lon_min_deg = 0, lon_max_deg = 0;

    void validate() const;
};

/// n positions uniform over the region at altitude 0, reproducible per rng.
std::vector<GeoPos> deploy_nodes(const Region& region, int n, RngStream& rng);

struct DroneLoop {
    std::vector<GeoPos> waypoints;  // closed polygon, >= 2 points
    double speed_mps = 10.0;

    void validate() const;
    double loop_length_m() const;
    double loop_time_s() const { return loop_length_m() / speed_mps; }
};

/// Constant-speed traversal of the closed waypoint polygon, wrapping.
GeoPos drone_position(const DroneLoop& loop, double t_s);

struct EphemerisTrace {
    std::vector<double> t_s;        // strictly increasing
    std::vector<GeoPos> positions;  // same length

    GeoPos position_at(double t) const;  // linear interpolation (via ECEF)
};

/// Parses CSV with header `t_s,lat_deg,lon_deg,alt_m`.
EphemerisTrace parse_ephemeris_csv(const std::string& text);

struct TleOrbit {
    OrbitalElements elements;
    double epoch_offset_s = 0.0;  // sim t=0 maps to epoch + offset
};

struct StaticPos {
    GeoPos pos;
};

/// Gateway trajectory: static point, drone waypoint loop, two-body TLE
/// orbit, or an externally supplied ephemeris trace.
struct MobilityModel {
    std::variant<StaticPos, DroneLoop, TleOrbit, EphemerisTrace> model;

    GeoPos position_at(double t_s) const;
};

} // namespace ntnsim
