#include "dcs/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcs {

PowerFlow split(double net_kw) noexcept {
    return PowerFlow{std::max(net_kw, 0.0), std::min(net_kw, 0.0)};
}

EfficiencyVector EfficiencyVector::from_loss(double loss_coeff) {
    if (!(loss_coeff >= 0.0 && loss_coeff <= 1.0)) {
        throw std::invalid_argument("loss coefficient must lie in [0, 1]");
    }
    return EfficiencyVector{1.0 - loss_coeff, 1.0 + loss_coeff};
}

void TimeGrid::validate() const {
    if (!(step_hours > 0.0)) throw std::invalid_argument("step duration must be positive");
    if (decision_step >= begin) throw std::invalid_argument("decision step must precede the schedule window");
    if (length < 1) throw std::invalid_argument("schedule window needs at least one step");
    if (extension < 0) throw std::invalid_argument("horizon extension cannot be negative");
}

void StorageDevice::validate(double step_hours) const {
    auto fail = [this](const std::string& what) {
        throw std::invalid_argument("device '" + id + "': " + what);
    };
    if (p_min > p_max) fail("p_min exceeds p_max");
    if (e_min > e_max) fail("e_min exceeds e_max");
    if (!(loss >= 0.0 && loss <= 1.0)) fail("loss coefficient outside [0, 1]");
    if (kind == DeviceKind::Ess) {
        if (soc < e_min - kLimitTolerance || soc > e_max + kLimitTolerance) fail("SOC outside capacity limits");
        return;
    }
    if (arrival >= departure) fail("arrival must precede departure");
    if (required_soc < e_min || required_soc > e_max) fail("required SOC outside capacity limits");
    if (arrival_soc) {
        if (*arrival_soc < e_min - kLimitTolerance || *arrival_soc > e_max + kLimitTolerance) {
            fail("arrival SOC outside capacity limits");
        }
        const double reachable = *arrival_soc + (1.0 - loss) * std::max(p_max, 0.0) * step_hours *
                                                    static_cast<double>(departure - arrival);
        if (reachable < required_soc - kLimitTolerance) fail("charging request unreachable before departure");
    }
}

StorageDevice make_ess(double p_min, double p_max, double e_min, double e_max, double loss, double soc) {
    StorageDevice d;
    d.kind = DeviceKind::Ess;
    d.id = "ess";
    d.p_min = p_min;
    d.p_max = p_max;
    d.e_min = e_min;
    d.e_max = e_max;
    d.loss = loss;
    d.soc = soc;
    return d;
}

StorageDevice make_pev(std::string id, double p_min, double p_max, double e_min, double e_max,
                       double loss, int arrival, int departure, double required_soc) {
    StorageDevice d;
    d.kind = DeviceKind::Pev;
    d.id = std::move(id);
    d.p_min = p_min;
    d.p_max = p_max;
    d.e_min = e_min;
    d.e_max = e_max;
    d.loss = loss;
    d.arrival = arrival;
    d.departure = departure;
    d.required_soc = required_soc;
    d.soc = e_min;
    return d;
}

double step_soc(double e, const PowerFlow& p, const EfficiencyVector& mu, double dt) noexcept {
    return e + mu.apply(p) * dt;
}

LimitReport check_limits(const StorageDevice& device, const PowerFlow& p, double e) {
    LimitReport report;
    const double n = p.net();
    if (n > device.p_max + kLimitTolerance) {
        report.power_violation = n - device.p_max;
    } else if (n < device.p_min - kLimitTolerance) {
        report.power_violation = n - device.p_min;
    }
    if (e > device.e_max + kLimitTolerance) {
        report.energy_violation = e - device.e_max;
    } else if (e < device.e_min - kLimitTolerance) {
        report.energy_violation = e - device.e_min;
    }
    return report;
}

}  // namespace dcs
