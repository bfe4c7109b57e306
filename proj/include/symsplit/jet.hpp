#pragma once

#include <cstddef>
#include <type_traits>
#include <utility>
#include <vector>

namespace symsplit {

/// Forward-mode dual number carrying a dense gradient. An empty gradient
/// stands for a constant, so literals mix freely with variables.
template <class T>
struct Jet {
    T value{};
    std::vector<T> grad;

    Jet() = default;
    Jet(T v) : value(std::move(v)) {}  // NOLINT(google-explicit-constructor)
    template <class U>
        requires std::is_arithmetic_v<U>
    Jet(U v) : value(T(v)) {}  // NOLINT(google-explicit-constructor)

    static Jet variable(T v, std::size_t index, std::size_t n) {
        Jet j(std::move(v));
        j.grad.assign(n, T(0));
        j.grad[index] = T(1);
        return j;
    }

    T derivative(std::size_t i) const { return i < grad.size() ? grad[i] : T(0); }

    Jet& operator+=(const Jet& o) {
        value += o.value;
        axpy(T(1), o.grad);
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        value -= o.value;
        axpy(T(-1), o.grad);
        return *this;
    }
    Jet& operator*=(const Jet& o) {
        for (auto& g : grad) g *= o.value;
        axpy(value, o.grad);
        value *= o.value;
        return *this;
    }
    Jet& operator/=(const Jet& o) {
        T inv = T(1) / o.value;
        value *= inv;
        for (auto& g : grad) g *= inv;
        axpy(-value * inv, o.grad);
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
    friend Jet operator/(Jet a, const Jet& b) { return a /= b; }
    friend Jet operator-(Jet a) {
        a.value = -a.value;
        for (auto& g : a.grad) g = -g;
        return a;
    }

private:
    void axpy(const T& alpha, const std::vector<T>& other) {
        if (other.empty()) return;
        if (grad.size() < other.size()) grad.resize(other.size(), T(0));
        for (std::size_t i = 0; i < other.size(); ++i) grad[i] += alpha * other[i];
    }
};

template <class T>
struct is_jet : std::false_type {};
template <class T>
struct is_jet<Jet<T>> : std::true_type {};

/// Strips any number of Jet layers down to the base value.
template <class T>
auto primal(const T& x) {
    if constexpr (is_jet<T>::value)
        return primal(x.value);
    else
        return x;
}

}  // namespace symsplit
