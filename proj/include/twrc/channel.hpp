#ifndef TWRC_CHANNEL_HPP
#define TWRC_CHANNEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "twrc/prob.hpp"

namespace twrc {

/// Deterministic uplink y0 = f(x1, x2), stored as a dense table.
/// Alphabets are index sets 0..size-1.
struct UplinkTable {
    std::size_t x1_size = 0;
    std::size_t x2_size = 0;
    std::size_t y0_size = 0;
    std::vector<std::size_t> table;  // [x1 * x2_size + x2] -> y0

    UplinkTable(std::size_t x1, std::size_t x2, std::size_t y0,
                std::vector<std::size_t> entries);

    std::size_t operator()(std::size_t x1, std::size_t x2) const {
        return table[x1 * x2_size + x2];
    }

    /// y0 symbols declared but never produced are permitted, just flagged.
    std::vector<bool> reachable_outputs() const;
    bool has_unreachable_outputs() const;
};

/// General uplink conditional pmf p(y0 | x1, x2).
struct StochasticUplink {
    std::size_t x1_size = 0;
    std::size_t x2_size = 0;
    std::size_t y0_size = 0;
    std::vector<double> cond;  // [x1][x2][y0]

    StochasticUplink(std::size_t x1, std::size_t x2, std::size_t y0,
                     std::vector<double> p);

    double at(std::size_t x1, std::size_t x2, std::size_t y0) const {
        return cond[(x1 * x2_size + x2) * y0_size + y0];
    }
};

/// Broadcast downlink p(y1, y2 | x0).
struct DownlinkChannel {
    std::size_t x0_size = 0;
    std::size_t y1_size = 0;
    std::size_t y2_size = 0;
    std::vector<double> cond;  // [x0][y1][y2]

    DownlinkChannel(std::size_t x0, std::size_t y1, std::size_t y2,
                    std::vector<double> p);

    double at(std::size_t x0, std::size_t y1, std::size_t y2) const {
        return cond[(x0 * y1_size + y1) * y2_size + y2];
    }

    /// Leg marginals p(y1|x0) and p(y2|x0), flattened [x0][y].
    std::vector<double> leg1() const;
    std::vector<double> leg2() const;
};

using Uplink = std::variant<UplinkTable, StochasticUplink>;

/// Whole-system container: uplink to the relay plus broadcast downlink.
struct ChannelSpec {
    std::string name;
    Uplink uplink;
    DownlinkChannel downlink;

    std::size_t x1_size() const;
    std::size_t x2_size() const;
    std::size_t y0_size() const;

    bool deterministic_uplink() const;
    /// The uplink as a table, converting a stochastic encoding when it is
    /// in fact deterministic. Throws NotDeterministic otherwise.
    UplinkTable uplink_table() const;
};

/// Embed a table as its indicator conditional pmf.
StochasticUplink lift(const UplinkTable& u);

/// True iff every (x1, x2) slice is a point mass within tolerance.
bool is_deterministic(const StochasticUplink& u);

/// Extracts f from a point-mass-sliced uplink; throws NotDeterministic
/// naming the offending slice otherwise.
UplinkTable to_table(const StochasticUplink& u);

/// p(x1, x2, y0) = p1(x1) p2(x2) p(y0|x1,x2).
JointPmf uplink_joint(const Pmf& p1, const Pmf& p2, const UplinkTable& u);
JointPmf uplink_joint(const Pmf& p1, const Pmf& p2, const StochasticUplink& u);

/// The two user-facing pair joints p(x0, y1) and p(x0, y2). Only the leg
/// marginals of the downlink enter, so y1-y2 correlation is irrelevant here.
std::pair<JointPmf, JointPmf> downlink_joints(const Pmf& p0, const DownlinkChannel& d);

/// Channel-spec JSON document (see README for the schema). Unknown keys
/// are rejected; validation errors carry the offending field / cell.
ChannelSpec parse_channel_spec(const std::string& text);
std::string emit_channel_spec(const ChannelSpec& spec);

/// Built-in example channels:
///   xor                   binary adder uplink, noiseless binary broadcast
///   multiplier            binary multiplier uplink, two noiseless orthogonal
///                         downlink channels (x0 carries one bit per user)
///   noiseless-orthogonal  alias for the multiplier system, named for its downlink
///   ff-adder-<q>          mod-q adder uplink (q prime), noiseless q-ary broadcast
///   bsc-broadcast(<eps>)  xor uplink, two independent BSC(eps) downlink legs
ChannelSpec builtin_channel(const std::string& name);

/// Resolves "builtin:<name>" or a filesystem path to a parsed spec.
ChannelSpec load_channel(const std::string& path_or_builtin);

}  // namespace twrc

#endif
