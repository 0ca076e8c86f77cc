#ifndef TWRC_SIM_HPP
#define TWRC_SIM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twrc/channel.hpp"
#include "twrc/prob.hpp"

namespace twrc {

enum class Side { user1, user2 };

/// Random block codebook: num_words length-n sequences drawn i.i.d. from
/// gen_pmf, reproducible from (seed, stream).
struct Codebook {
    std::size_t owner = 0;  // node id: 1 and 2 are the users, 0 the relay
    std::uint64_t num_words = 0;
    std::size_t n = 0;
    std::size_t alphabet_size = 0;
    Pmf gen_pmf = Pmf({1.0});
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<std::uint16_t> symbols;  // num_words * n

    std::span<const std::uint16_t> word(std::uint64_t w) const {
        return {symbols.data() + w * n, n};
    }
};

/// The relay's bijection between message pairs and unique uplink output
/// sequences: forward maps (w1, w2) to w0, sequences holds y0(w0).
struct RelayIndex {
    std::uint64_t m = 0;
    std::size_t n = 0;
    std::uint64_t w1_count = 0;
    std::uint64_t w2_count = 0;
    std::vector<std::uint32_t> forward;   // [w1 * w2_count + w2] -> w0
    std::vector<std::uint16_t> sequences; // m * n

    std::uint32_t w0(std::uint64_t w1, std::uint64_t w2) const {
        return forward[w1 * w2_count + w2];
    }
    std::span<const std::uint16_t> sequence(std::uint64_t w0) const {
        return {sequences.data() + w0 * n, n};
    }
};

struct SimConfig {
    ChannelSpec spec;
    double rate1 = 0.0;
    double rate2 = 0.0;
    Pmf p1;
    Pmf p2;
    Pmf p0;
    std::size_t n = 0;
    double epsilon = 0.05;
    std::size_t trials = 2000;
    std::size_t num_blocks = 10;  // B, enters only the rate accounting
    std::uint64_t seed = 1;

    /// Message-bit budget for literal codebook enumeration.
    std::size_t cap_bits = 24;
    /// Trials per codebook draw (codebook-averaged error accounting).
    std::size_t batch_size = 100;

    enum class Backend {
        automatic,   // enumerated within budget, collapsed beyond it
        enumerated,  // literal codebooks and candidate enumeration
        collapsed    // exact conditional-law sampling, no codebook tables
    };
    Backend backend = Backend::automatic;

    /// Message bits actually simulated: ceil(n * rate).
    std::size_t bits1() const;
    std::size_t bits2() const;

    /// Config with uniform input distributions on all three alphabets.
    static SimConfig uniform_inputs(ChannelSpec spec, double rate1, double rate2,
                                    std::size_t n);
};

struct ErrorEstimate {
    double estimate = 0.0;
    double ci_lo = 0.0;   // Wilson 95% interval
    double ci_hi = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t trials = 0;
};

struct SimReport {
    std::size_t n = 0;
    double rate1 = 0.0;  // requested
    double rate2 = 0.0;
    double rate1_simulated = 0.0;  // ceil(n*R)/n
    double rate2_simulated = 0.0;
    double rate1_effective = 0.0;  // (B-1)/B * simulated
    double rate2_effective = 0.0;
    std::size_t num_blocks = 0;
    ErrorEstimate w0_user1;
    ErrorEstimate w0_user2;
    ErrorEstimate msg_user1;
    ErrorEstimate msg_user2;
    ErrorEstimate total;  // Pr{either message decoded wrongly}
    bool m_available = false;
    double m_mean = 0.0;  // mean unique-sequence count over codebook draws
    double collision_bias_bound = 0.0;  // collapsed-backend certificate
    std::string backend;
    std::string generator_version;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double wall_seconds = 0.0;
};

struct CodebookSet {
    Codebook user1;
    Codebook user2;
    Codebook relay;
    RelayIndex index;
};

/// Deduplicates f(x1(w1), x2(w2)) over all message pairs into first-appearance
/// indices.
RelayIndex build_relay_index(const Codebook& cb1, const Codebook& cb2,
                             const UplinkTable& u);

/// User codebooks, the relay index over their pair outputs, and the relay
/// codebook of m sequences drawn from p0. batch_index selects the codebook
/// draw; everything is a pure function of (cfg.seed, batch_index).
CodebookSet build_codebooks(const SimConfig& cfg, std::uint64_t batch_index);

/// S_{own}(a): relay indices consistent with one's own message.
std::vector<std::uint32_t> candidate_set(std::uint64_t own_message, const Codebook& cb1,
                                         const Codebook& cb2, const RelayIndex& idx,
                                         Side side = Side::user1);

/// Weak (entropy) joint typicality of a sequence pair against a reference
/// 2-axis joint: both empirical marginal log-probabilities and the pair
/// log-probability within epsilon of the respective entropies. Any
/// zero-probability symbol fails immediately.
bool jointly_typical(std::span<const std::uint16_t> x, std::span<const std::uint16_t> y,
                     const JointPmf& joint, double epsilon);

struct Decoded {
    enum class Status { ok, none, ambiguous };
    Status status = Status::none;
    std::uint32_t value = 0;
    bool ok() const { return status == Status::ok; }
};

/// Unique-typical-candidate rule: succeeds iff exactly one index in
/// `candidates` has its relay codeword jointly typical with the received
/// sequence. Ties and empty results are failures, never resolved further.
Decoded decode_w0(std::span<const std::uint16_t> received, const Codebook& relay_cb,
                  const std::vector<std::uint32_t>& candidates, const JointPmf& joint,
                  double epsilon);

/// Knowing y0(w0) exactly, invert the uplink against one's own codeword:
/// unique k with matching relay index, else failure.
Decoded decode_message(std::uint32_t w0, std::uint64_t own_message, const Codebook& cb1,
                       const Codebook& cb2, const RelayIndex& idx, Side side);

struct TrialOutcome {
    bool w0_err_u1 = false;
    bool w0_err_u2 = false;
    bool msg_err_u1 = false;
    bool msg_err_u2 = false;
};

/// One end-to-end block: draw messages, push y0 through the relay index,
/// transmit x0(w0), sample the downlink, decode w0 then the message at both
/// users. Failures are recorded, never thrown.
TrialOutcome run_trial(const SimConfig& cfg, const CodebookSet& books, RandomSource& rng);

/// Monte Carlo error estimation over cfg.trials with fresh codebooks per
/// batch. Picks the literal or collapsed backend per cfg; deterministic in
/// (cfg, seed).
SimReport estimate_error(const SimConfig& cfg);

/// Exact probability that an i.i.d. `input`-distributed sequence is jointly
/// typical with y under `joint`: the per-candidate false-alarm rate of the
/// w0 decoder, computed by composition enumeration over symbol counts.
double typical_set_mass(const Pmf& input, const JointPmf& joint,
                        std::span<const std::uint16_t> y, double epsilon);

}  // namespace twrc

#endif
