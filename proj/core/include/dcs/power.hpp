#pragma once

#include <optional>
#include <string>

namespace dcs {

/// Limit checks treat excursions below this magnitude (kW or kWh) as feasible.
inline constexpr double kLimitTolerance = 1e-9;

/// Average power over one step, split by direction.
///
/// `fwd` carries flow in the reference direction (grid import, device
/// charging) and is never negative; `rev` carries the opposite direction and
/// is never positive. Only the net value is physical, but losses and tariffs
/// are asymmetric in direction so both components are kept.
struct PowerFlow {
    double fwd = 0.0;
    double rev = 0.0;

    [[nodiscard]] double net() const noexcept { return fwd + rev; }
    [[nodiscard]] bool valid() const noexcept { return fwd >= 0.0 && rev <= 0.0; }

    friend bool operator==(const PowerFlow&, const PowerFlow&) = default;
};

[[nodiscard]] inline double net(const PowerFlow& p) noexcept { return p.net(); }

/// Canonical complementary split: at most one component is nonzero.
[[nodiscard]] PowerFlow split(double net_kw) noexcept;

/// Weights applied to the two directions in the SOC update.
struct EfficiencyVector {
    double charge = 1.0;     // 1 - mu_n
    double discharge = 1.0;  // 1 + mu_n

    /// Throws std::invalid_argument unless loss_coeff is in [0, 1].
    static EfficiencyVector from_loss(double loss_coeff);

    [[nodiscard]] double apply(const PowerFlow& p) const noexcept {
        return charge * p.fwd + discharge * p.rev;
    }
};

/// Step layout of one scheduling problem. Steps are absolute indices.
struct TimeGrid {
    double step_hours = 1.0;
    int decision_step = 0;   // k0
    int begin = 12;          // k_b
    int length = 24;         // S
    int extension = 12;      // S'

    [[nodiscard]] int end() const noexcept { return begin + length; }
    [[nodiscard]] int extended_end() const noexcept { return begin + length + extension; }
    [[nodiscard]] int extended_steps() const noexcept { return length + extension; }

    /// Throws std::invalid_argument when a grid invariant is broken.
    void validate() const;
};

enum class DeviceKind { Ess, Pev };

/// One controllable storage device. PEV-only fields are ignored for the ESS.
struct StorageDevice {
    DeviceKind kind = DeviceKind::Ess;
    std::string id;
    double p_min = 0.0;
    double p_max = 0.0;
    double e_min = 0.0;
    double e_max = 0.0;
    double loss = 0.0;
    double soc = 0.0;

    int arrival = 0;
    int departure = 0;
    double required_soc = 0.0;
    std::optional<double> arrival_soc;

    [[nodiscard]] EfficiencyVector efficiency() const { return EfficiencyVector::from_loss(loss); }
    [[nodiscard]] bool connected(int step) const noexcept {
        return kind == DeviceKind::Ess || (arrival <= step && step < departure);
    }

    /// Checks the static invariants (limits ordered, PEV window and request
    /// consistent, declared request reachable from the arrival SOC when it
    /// is known). Throws std::invalid_argument naming the device.
    void validate(double step_hours) const;
};

[[nodiscard]] StorageDevice make_ess(double p_min, double p_max, double e_min, double e_max,
                                     double loss, double soc);
[[nodiscard]] StorageDevice make_pev(std::string id, double p_min, double p_max, double e_min,
                                     double e_max, double loss, int arrival, int departure,
                                     double required_soc);

/// e + mu^T p * dt.
[[nodiscard]] double step_soc(double e, const PowerFlow& p, const EfficiencyVector& mu,
                              double dt) noexcept;

/// Signed excursions outside the device limits. Positive values exceed the
/// upper limit, negative values undershoot the lower one, zero is feasible.
struct LimitReport {
    double power_violation = 0.0;
    double energy_violation = 0.0;

    [[nodiscard]] bool ok() const noexcept { return power_violation == 0.0 && energy_violation == 0.0; }
};

[[nodiscard]] LimitReport check_limits(const StorageDevice& device, const PowerFlow& p, double e);

}  // namespace dcs
