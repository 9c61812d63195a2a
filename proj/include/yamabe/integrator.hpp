#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

namespace yamabe {

/// One classical Runge-Kutta step of y' = f(y). The field writes dy/dt and
/// returns false when y lies outside its domain, which aborts the step.
template <class Field>
std::optional<std::vector<double>> rk4_step(Field&& field, std::span<const double> y, double dt)
{
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    if (!field(y, std::span<double>(k1)))
        return std::nullopt;
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    if (!field(std::span<const double>(tmp), std::span<double>(k2)))
        return std::nullopt;
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    if (!field(std::span<const double>(tmp), std::span<double>(k3)))
        return std::nullopt;
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * k3[i];
    if (!field(std::span<const double>(tmp), std::span<double>(k4)))
        return std::nullopt;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// Halve on rejection, grow by `growth` after `grow_after` consecutive
/// accepted steps, never above dt_max.
class StepController {
public:
    StepController(double dt, double dt_min, double dt_max, double growth = 1.5, int grow_after = 10)
        : dt_(std::min(dt, dt_max)), dt_min_(dt_min), dt_max_(dt_max), growth_(growth), grow_after_(grow_after)
    {}

    double dt() const noexcept { return dt_; }
    bool underflow() const noexcept { return dt_ < dt_min_; }

    void reject() noexcept
    {
        dt_ *= 0.5;
        streak_ = 0;
    }

    void accept() noexcept
    {
        if (++streak_ >= grow_after_) {
            dt_ = std::min(dt_ * growth_, dt_max_);
            streak_ = 0;
        }
    }

private:
    double dt_;
    double dt_min_;
    double dt_max_;
    double growth_;
    int grow_after_;
    int streak_{0};
};

} // namespace yamabe
