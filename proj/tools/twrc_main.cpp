// twrc: capacity regions and coding simulations for the restricted
// deterministic-uplink two-way relay channel.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twrc/report.hpp"

namespace {

using namespace twrc;

std::string sanitize(const std::string& name) {
    std::string out;
    for (const char c : name) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                   ? c
                   : '_';
    }
    return out.empty() ? std::string("channel") : out;
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw ParseError(std::string(what) + ": expected \"a,b\", got \"" + text + "\"");
    }
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (...) {
        throw ParseError(std::string(what) + ": bad number in \"" + text + "\"");
    }
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - pos);
        try {
            out.push_back(static_cast<std::size_t>(std::stoul(tok)));
        } catch (...) {
            throw ParseError("--n-list: bad entry \"" + tok + "\"");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ParseError("--n-list: empty");
    return out;
}

void add_input_digest(RunManifest& manifest, const std::string& spec_arg) {
    if (spec_arg.rfind("builtin:", 0) == 0) {
        manifest.inputs.emplace_back(spec_arg, "builtin");
    } else {
        manifest.inputs.emplace_back(spec_arg, fnv1a64_hex(read_file(spec_arg)));
    }
}

std::string out_path(const std::string& dir, const std::string& name) {
    return dir.empty() || dir == "." ? name : dir + "/" + name;
}

int cmd_region(const std::string& spec_arg, std::size_t resolution,
               std::size_t lambda_steps, const std::string& out_mode,
               const std::string& out_dir, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelSpec spec = load_channel(spec_arg);
    if (!spec.deterministic_uplink()) {
        throw NotDeterministic(
            "the capacity theorem requires a deterministic uplink y0 = f(x1, x2); "
            "spec \"" + spec.name + "\" has a noisy uplink");
    }
    SearchConfig search;
    search.resolution = resolution;
    search.seed = seed;
    SweepConfig sweep;
    sweep.lambda_steps = lambda_steps;

    const UplinkTable table = spec.uplink_table();
    const RegionPolyline hull = conv_r1(table, search);
    const RegionPolyline frontier = r2_frontier(spec.downlink, sweep);
    const RegionPolyline capacity = intersect_regions(hull, frontier);

    const std::string stem = sanitize(spec.name);
    RunManifest manifest;
    manifest.command = "region";
    manifest.seed = seed;
    manifest.config = {{"spec", spec_arg},
                       {"resolution", std::to_string(resolution)},
                       {"lambda_steps", std::to_string(lambda_steps)},
                       {"out", out_mode},
                       {"out_dir", out_dir}};
    add_input_digest(manifest, spec_arg);

    const bool csv = out_mode == "csv" || out_mode == "both";
    const bool svg = out_mode == "svg" || out_mode == "both";
    if (csv) {
        const std::vector<std::pair<std::string, const RegionPolyline*>> layers = {
            {stem + "_capacity.csv", &capacity},
            {stem + "_conv_r1.csv", &hull},
            {stem + "_r2_frontier.csv", &frontier}};
        for (const auto& [name, region] : layers) {
            const std::string path = out_path(out_dir, name);
            write_file(path, region_csv(*region, resolution));
            manifest.outputs.push_back(path);
        }
    }
    if (svg) {
        const std::string path = out_path(out_dir, stem + "_region.svg");
        write_file(path, region_svg({{&hull, "Conv(R1)", "#1f77b4", false},
                                     {&frontier, "R2 frontier", "#2ca02c", false},
                                     {&capacity, "capacity", "#d62728", true}}));
        manifest.outputs.push_back(path);
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_path(out_dir, stem + "_region_manifest.json"), manifest_json(manifest));

    const auto& top = capacity.vertices();
    std::cout << "capacity region of \"" << spec.name << "\": " << top.size()
              << " boundary vertices, max R1 = " << capacity.max_r1()
              << ", max R2 = " << capacity.max_r2() << "\n";
    return 0;
}

int cmd_decompose(const std::string& spec_arg, const std::string& point_text,
                  std::size_t resolution, std::uint64_t seed,
                  const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelSpec spec = load_channel(spec_arg);
    const auto [r1, r2] = parse_pair(point_text, "--point");
    SearchConfig search;
    search.resolution = resolution;
    search.seed = seed;
    const UplinkTable table = spec.uplink_table();
    const RegionPolyline hull = conv_r1(table, search);
    const TimeShare share = decompose_time_sharing({r1, r2}, hull, table);

    char buf[160];
    RatePoint sum{0.0, 0.0};
    std::string listing;
    std::snprintf(buf, sizeof(buf), "time-sharing decomposition of (%.12g, %.12g):\n", r1,
                  r2);
    listing += buf;
    for (const auto& c : share.components) {
        const RatePoint corner = uplink_rectangle(c.p1, c.p2, table);
        sum.r1 += c.weight * corner.r1;
        sum.r2 += c.weight * corner.r2;
        std::snprintf(buf, sizeof(buf), "  weight %.12g  corner (%.12g, %.12g)  p1=[",
                      c.weight, corner.r1, corner.r2);
        listing += buf;
        for (std::size_t i = 0; i < c.p1.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.12g", i ? " " : "", c.p1[i]);
            listing += buf;
        }
        listing += "]  p2=[";
        for (std::size_t i = 0; i < c.p2.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.12g", i ? " " : "", c.p2[i]);
            listing += buf;
        }
        listing += "]\n";
    }
    const double residual = std::hypot(sum.r1 - r1, sum.r2 - r2);
    std::snprintf(buf, sizeof(buf), "  components: %zu, residual %.3g\n",
                  share.components.size(), residual);
    listing += buf;
    std::cout << listing;

    const std::string stem = sanitize(spec.name) + "_decompose";
    const std::string txt_path = out_path(out_dir, stem + ".txt");
    write_file(txt_path, listing);
    RunManifest manifest;
    manifest.command = "decompose";
    manifest.seed = seed;
    manifest.config = {{"spec", spec_arg},
                       {"point", point_text},
                       {"resolution", std::to_string(resolution)}};
    add_input_digest(manifest, spec_arg);
    manifest.outputs = {txt_path};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_path(out_dir, stem + "_manifest.json"), manifest_json(manifest));
    return 0;
}

int cmd_simulate(const std::string& spec_arg, const std::string& rates_text,
                 const std::string& n_list_text, std::size_t trials, double epsilon,
                 std::uint64_t seed, std::size_t blocks, std::size_t cap_bits,
                 std::size_t batch, const std::string& backend_name,
                 const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelSpec spec = load_channel(spec_arg);
    const auto [r1, r2] = parse_pair(rates_text, "--rates");
    const std::vector<std::size_t> n_list = parse_n_list(n_list_text);

    SimConfig::Backend backend = SimConfig::Backend::automatic;
    if (backend_name == "enumerated") backend = SimConfig::Backend::enumerated;
    else if (backend_name == "collapsed") backend = SimConfig::Backend::collapsed;
    else if (backend_name != "auto") throw ParseError("--backend: auto|enumerated|collapsed");

    std::vector<SimReport> reports;
    std::string csv = sim_csv_header();
    for (const std::size_t n : n_list) {
        SimConfig cfg = SimConfig::uniform_inputs(spec, r1, r2, n);
        cfg.epsilon = epsilon;
        cfg.trials = trials;
        cfg.num_blocks = blocks;
        cfg.seed = seed;
        cfg.cap_bits = cap_bits;
        cfg.batch_size = batch;
        cfg.backend = backend;
        const SimReport rep = estimate_error(cfg);
        csv += sim_csv_row(rep);
        std::cout << "n=" << rep.n << " backend=" << rep.backend
                  << " err_total=" << rep.total.estimate << " [" << rep.total.ci_lo << ", "
                  << rep.total.ci_hi << "]\n";
        reports.push_back(rep);
    }

    const std::string stem = sanitize(spec.name) + "_sim";
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.seed = seed;
    manifest.config = {{"spec", spec_arg},
                       {"rates", rates_text},
                       {"n_list", n_list_text},
                       {"trials", std::to_string(trials)},
                       {"epsilon", std::to_string(epsilon)},
                       {"B", std::to_string(blocks)},
                       {"cap_bits", std::to_string(cap_bits)},
                       {"batch", std::to_string(batch)},
                       {"backend", backend_name}};
    add_input_digest(manifest, spec_arg);
    const std::string csv_path = out_path(out_dir, stem + ".csv");
    const std::string json_path = out_path(out_dir, stem + "_report.json");
    write_file(csv_path, csv);
    write_file(json_path, sim_reports_json(reports));
    manifest.outputs = {csv_path, json_path};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_path(out_dir, stem + "_manifest.json"), manifest_json(manifest));
    return 0;
}

int cmd_cf_check(const std::string& spec_arg, const std::string& cf_path, double delta,
                 const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelSpec spec = load_channel(spec_arg);
    const CfInput cf = parse_cf_input(read_file(cf_path));
    const StochasticUplink uplink =
        spec.deterministic_uplink() ? lift(spec.uplink_table())
                                    : std::get<StochasticUplink>(spec.uplink);
    const CfEvaluation eval = cf_evaluate(cf, uplink, spec.downlink, delta);
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "compress-forward point on \"%s\":\n"
                  "  rates (R1, R2) = (%.12g, %.12g)\n"
                  "  forwarding margin to user 1: %.12g\n"
                  "  forwarding margin to user 2: %.12g\n"
                  "  feasible at slack %.12g: %s\n",
                  spec.name.c_str(), eval.rates.r1, eval.rates.r2, eval.slack.first,
                  eval.slack.second, delta, eval.feasible ? "yes" : "no");
    const std::string listing = buf;
    std::cout << listing;

    const std::string stem = sanitize(spec.name) + "_cf_check";
    const std::string txt_path = out_path(out_dir, stem + ".txt");
    write_file(txt_path, listing);
    RunManifest manifest;
    manifest.command = "cf-check";
    manifest.seed = 0;
    manifest.config = {{"spec", spec_arg},
                       {"cf_input", cf_path},
                       {"delta", std::to_string(delta)}};
    add_input_digest(manifest, spec_arg);
    manifest.inputs.emplace_back(cf_path, fnv1a64_hex(read_file(cf_path)));
    manifest.outputs = {txt_path};
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_path(out_dir, stem + "_manifest.json"), manifest_json(manifest));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacity regions and coding simulations for the two-way relay channel"};
    app.require_subcommand(1);

    std::string spec_arg, out_mode = "csv", out_dir = ".", point_text, rates_text;
    std::string n_list_text = "100,200,400", backend_name = "auto", cf_path;
    std::size_t resolution = 64, lambda_steps = 257, trials = 2000, blocks = 10;
    std::size_t cap_bits = 24, batch = 100;
    double epsilon = 0.05, delta = 0.0;
    std::uint64_t seed = 1;

    auto* region = app.add_subcommand("region", "compute the capacity region layers");
    region->add_option("spec", spec_arg, "channel spec path or builtin:<name>")->required();
    region->add_option("--resolution", resolution, "input-simplex grid resolution");
    region->add_option("--lambda-steps", lambda_steps, "frontier sweep steps");
    region->add_option("--out", out_mode, "csv|svg|both")
        ->check(CLI::IsMember({"csv", "svg", "both"}));
    region->add_option("--out-dir", out_dir, "output directory");
    region->add_option("--seed", seed, "seed for sampled searches");

    auto* decompose = app.add_subcommand("decompose", "time-share a point of Conv(R1)");
    decompose->add_option("spec", spec_arg)->required();
    decompose->add_option("--point", point_text, "target rate pair r1,r2")->required();
    decompose->add_option("--resolution", resolution);
    decompose->add_option("--seed", seed);
    decompose->add_option("--out-dir", out_dir);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo of the relay-index scheme");
    simulate->add_option("spec", spec_arg)->required();
    simulate->add_option("--rates", rates_text, "rate pair r1,r2")->required();
    simulate->add_option("--n-list", n_list_text, "comma-separated block lengths");
    simulate->add_option("--trials", trials);
    simulate->add_option("--epsilon", epsilon, "typicality tolerance");
    simulate->add_option("--seed", seed);
    simulate->add_option("--B", blocks, "block count for effective-rate accounting");
    simulate->add_option("--cap-bits", cap_bits, "codebook enumeration budget");
    simulate->add_option("--batch", batch, "trials per codebook draw");
    simulate->add_option("--backend", backend_name, "auto|enumerated|collapsed");
    simulate->add_option("--out-dir", out_dir);

    auto* cf = app.add_subcommand("cf-check", "evaluate a compress-forward input");
    cf->add_option("spec", spec_arg)->required();
    cf->add_option("--cf-input", cf_path, "CF input JSON path")->required();
    cf->add_option("--delta", delta, "strictness slack");
    cf->add_option("--out-dir", out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (region->parsed()) {
            return cmd_region(spec_arg, resolution, lambda_steps, out_mode, out_dir, seed);
        }
        if (decompose->parsed()) {
            return cmd_decompose(spec_arg, point_text, resolution, seed, out_dir);
        }
        if (simulate->parsed()) {
            return cmd_simulate(spec_arg, rates_text, n_list_text, trials, epsilon, seed,
                                blocks, cap_bits, batch, backend_name, out_dir);
        }
        if (cf->parsed()) {
            return cmd_cf_check(spec_arg, cf_path, delta, out_dir);
        }
    } catch (const twrc::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const twrc::NotDeterministic& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const twrc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
