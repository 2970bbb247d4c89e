#pragma once

// Feed-forward switch controller for a single 2x2 switch and storage loop.
//
// Time advances in whole bins; one loop transit equals one bin period. The
// bin counter runs 1 (early) .. m (late). A herald diverts that bin's idler
// into the loop (Cross); the stored photon is released to the output when
// the counter wraps from m back to 1.

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopmux {

enum class SwitchState { Cross, Bar };

/// What to do with a herald that arrives while the loop is occupied.
enum class OverwritePolicy {
    KeepLast,   // store the newer photon, dump the older one off-target
    KeepFirst,  // keep the stored photon, let the new one bypass
};

struct ControllerState
{
    int bin_counter = 1;
    bool occupied = false;
    std::optional<int> stored_origin_bin;
    SwitchState switch_state = SwitchState::Bar;

    friend bool operator==(ControllerState const&, ControllerState const&) = default;
};

struct ControllerOutput
{
    bool capture = false;
    bool deliver = false;
    bool dump = false;
    std::optional<int> delivered_origin_bin;

    friend bool operator==(ControllerOutput const&, ControllerOutput const&) = default;
};

/// Loop passes made by a photon heralded in `origin_bin` before delivery.
inline int passes_for_origin(int origin_bin, int depth)
{
    if (depth < 1 || origin_bin < 1 || origin_bin > depth)
        throw std::domain_error("origin bin must lie in 1..depth");
    return depth - origin_bin + 1;
}

struct StepResult
{
    ControllerState state;
    ControllerOutput output;
};

/// Consume one clock bin.
///
/// The herald is handled first; delivery happens at the end of bin m. A
/// herald in bin m that overwrites a stored photon therefore reports both
/// `dump` (the old photon leaves at bin m) and `deliver` (the new photon
/// leaves after its single pass at the cycle boundary).
inline StepResult step(ControllerState state, bool herald, OverwritePolicy policy, int depth)
{
    if (depth < 1 || state.bin_counter < 1 || state.bin_counter > depth
        || state.occupied != state.stored_origin_bin.has_value())
        throw std::logic_error("inconsistent controller state");

    ControllerOutput out;
    int const bin = state.bin_counter;

    if (herald && (!state.occupied || policy == OverwritePolicy::KeepLast))
    {
        out.capture = true;
        out.dump = state.occupied;
        state.occupied = true;
        state.stored_origin_bin = bin;
    }

    if (bin == depth && state.occupied)
    {
        out.deliver = true;
        out.delivered_origin_bin = state.stored_origin_bin;
        state.occupied = false;
        state.stored_origin_bin.reset();
    }

    state.switch_state = (out.capture || out.deliver) ? SwitchState::Cross : SwitchState::Bar;
    state.bin_counter = bin == depth ? 1 : bin + 1;
    return {state, out};
}

class MuxController
{
  public:
    explicit MuxController(int depth, OverwritePolicy policy = OverwritePolicy::KeepLast)
        : depth_(depth), policy_(policy)
    {
        if (depth < 1)
            throw std::invalid_argument("multiplexing depth must be >= 1");
    }

    ControllerOutput step(bool herald)
    {
        auto [next, out] = loopmux::step(state_, herald, policy_, depth_);
        state_ = next;
        return out;
    }

    ControllerState const& state() const { return state_; }
    int depth() const { return depth_; }
    OverwritePolicy policy() const { return policy_; }

  private:
    int depth_;
    OverwritePolicy policy_;
    ControllerState state_;
};

/// Fold `step` over a herald sequence from the initial state. The input is
/// padded with `false` to a whole number of cycles.
inline std::vector<ControllerOutput> run_trace(std::vector<bool> const& heralds,
                                               int depth,
                                               OverwritePolicy policy)
{
    MuxController ctrl(depth, policy);
    auto const m = static_cast<std::size_t>(depth);
    std::size_t const padded = (heralds.size() + m - 1) / m * m;
    std::vector<ControllerOutput> outputs;
    outputs.reserve(padded);
    for (std::size_t i = 0; i < padded; ++i)
        outputs.push_back(ctrl.step(i < heralds.size() && heralds[i]));
    return outputs;
}

/// Trace text: header then one "cycle,bin,herald,capture,dump,deliver,origin"
/// line per step. Cycles and bins are 1-based; origin is empty when nothing
/// is delivered.
inline void write_trace(std::ostream& os,
                        std::vector<bool> const& heralds,
                        std::vector<ControllerOutput> const& outputs,
                        int depth)
{
    os << "cycle,bin,herald,capture,dump,deliver,origin\n";
    for (std::size_t i = 0; i < outputs.size(); ++i)
    {
        auto const& o = outputs[i];
        bool const h = i < heralds.size() && heralds[i];
        os << i / static_cast<std::size_t>(depth) + 1 << ','
           << i % static_cast<std::size_t>(depth) + 1 << ',' << h << ',' << o.capture << ','
           << o.dump << ',' << o.deliver << ',';
        if (o.delivered_origin_bin)
            os << *o.delivered_origin_bin;
        os << '\n';
    }
}

inline std::string to_string(OverwritePolicy p)
{
    return p == OverwritePolicy::KeepLast ? "keep_last" : "keep_first";
}

}  // namespace loopmux
