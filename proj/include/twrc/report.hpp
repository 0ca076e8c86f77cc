#ifndef TWRC_REPORT_HPP
#define TWRC_REPORT_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twrc/region.hpp"
#include "twrc/sim.hpp"

namespace twrc {

inline constexpr const char* kToolVersion = "twrc 0.1.0";

/// Region CSV: a kind/resolution header block, then one `r1,r2,cert` row per
/// boundary vertex in increasing r1. Certificates are semicolon-joined
/// `p=[...]` groups, comma-free so the CSV stays three columns.
std::string region_csv(const RegionPolyline& region, std::size_t resolution);

/// Parses the vertex coordinates back out of a region CSV (certs ignored).
std::vector<RatePoint> parse_region_csv_points(const std::string& text);

std::string sim_csv_header();
std::string sim_csv_row(const SimReport& report);
std::string sim_reports_json(const std::vector<SimReport>& reports);

struct SvgLayer {
    const RegionPolyline* region;
    std::string label;
    std::string color;
    bool fill;
};

/// Static picture of one or more regions: axes, filled capacity polygon,
/// outlined constituents, labeled vertices.
std::string region_svg(const std::vector<SvgLayer>& layers);

struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;  // ordered echo
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::pair<std::string, std::string>> inputs;  // path -> digest
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};

std::string manifest_json(const RunManifest& manifest);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

/// CF-input JSON document:
/// {"q": [...], "x1_given_q": [[...]], "x2_given_q": [[...]],
///  "y0hat_given_y0": [[...]], "x0": [...]}
CfInput parse_cf_input(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace twrc

#endif
