#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace symsplit {

/// sum += delta, carrying the rounding error of the addition in `err`.
template <class T>
inline void compensated_add(T& sum, T& err, const T& delta) {
    T y = delta + err;
    T s = sum + y;
    err = (sum - s) + y;
    sum = s;
}

/// Positions q, conjugate momenta p, and time t. Optionally carries the
/// rounding error of every coordinate so long runs can use compensated
/// accumulation; all updates go through add_q / add_p / add_t.
template <class T>
struct PhaseState {
    std::vector<T> q;
    std::vector<T> p;
    T t{0};

    PhaseState() = default;
    PhaseState(std::vector<T> q_, std::vector<T> p_, T t_ = T(0))
        : q(std::move(q_)), p(std::move(p_)), t(std::move(t_)) {
        if (q.size() != p.size()) throw std::invalid_argument("PhaseState: q and p differ in length");
    }

    std::size_t dim() const { return q.size(); }
    bool compensated() const { return compensated_; }

    void set_compensated(bool on) {
        compensated_ = on;
        q_err.assign(on ? q.size() : 0, T(0));
        p_err.assign(on ? p.size() : 0, T(0));
        t_err = T(0);
    }

    void add_q(std::size_t i, const T& d) {
        if (compensated_)
            compensated_add(q[i], q_err[i], d);
        else
            q[i] += d;
    }
    void add_p(std::size_t i, const T& d) {
        if (compensated_)
            compensated_add(p[i], p_err[i], d);
        else
            p[i] += d;
    }
    void add_t(const T& d) {
        if (compensated_)
            compensated_add(t, t_err, d);
        else
            t += d;
    }

    /// Copy without the compensation terms.
    PhaseState plain() const { return PhaseState(q, p, t); }

    bool finite() const {
        using std::isfinite;
        for (const auto& x : q)
            if (!isfinite(x)) return false;
        for (const auto& x : p)
            if (!isfinite(x)) return false;
        return true;
    }

private:
    std::vector<T> q_err, p_err;
    T t_err{0};
    bool compensated_ = false;
};

}  // namespace symsplit
