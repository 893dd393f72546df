#ifndef KINSPEC_SCALED_HH
#define KINSPEC_SCALED_HH

#include <cmath>
#include <cstdint>
#include "kinspec/errors.hh"

namespace kinspec {

// Floating value sig * 2^e2 with sig in +-[1,2) (or exactly 0) and a 64-bit
// exponent. Extends the double range far enough for squared norms like
// c_400 ~ 10^602 and weight values like e^{-x^2} near x = 30, which overflow
// or underflow ordinary doubles. Collapsing back to double is exact whenever
// the value is representable.
struct scaled_value {
    double sig = 0.0;
    int64_t e2 = 0;

    scaled_value() = default;
    explicit scaled_value(double v) {
        if (v == 0.0) { sig = 0.0; e2 = 0; return; }
        int k;
        sig = 2.0 * std::frexp(v, &k); // frexp gives |f| in [0.5,1)
        e2 = k - 1;
    }

    static scaled_value from_parts(double s, int64_t e) {
        scaled_value r(s);
        if (r.sig != 0.0) r.e2 += e;
        return r;
    }

    // exp(y) without intermediate overflow/underflow for any y.
    static scaled_value exp(double y) {
        if (std::abs(y) < 670.0) return scaled_value(std::exp(y));
        double t = y * 1.4426950408889634074; // y / ln 2
        double ip = std::floor(t);
        scaled_value r;
        r.sig = std::exp2(t - ip); // in [1,2)
        r.e2 = static_cast<int64_t>(ip);
        return r;
    }

    static scaled_value pow2(int64_t e) { return from_parts(1.0, e); }

    bool is_zero() const { return sig == 0.0; }
    int sign() const { return sig > 0.0 ? 1 : (sig < 0.0 ? -1 : 0); }

    scaled_value operator-() const {
        scaled_value r = *this;
        r.sig = -r.sig;
        return r;
    }

    // Both operands normalized, so |product sig| lands in [1,4): one halving
    // (an exact power-of-two rescale) renormalizes. Cheap enough for the inner
    // loops of the polynomial product form.
    scaled_value& operator*=(const scaled_value& o) {
        if (sig == 0.0 || o.sig == 0.0) { sig = 0.0; e2 = 0; return *this; }
        sig *= o.sig;
        e2 += o.e2;
        if (std::abs(sig) >= 2.0) { sig *= 0.5; ++e2; }
        return *this;
    }
    scaled_value& operator*=(double v) { return *this *= scaled_value(v); }
    scaled_value& operator/=(const scaled_value& o) {
        if (o.sig == 0.0) throw numerical_error("scaled_value: divide by zero");
        if (sig == 0.0) return *this;
        sig /= o.sig; // in (0.5, 2]
        e2 -= o.e2;
        if (std::abs(sig) < 1.0) { sig *= 2.0; --e2; }
        else if (std::abs(sig) >= 2.0) { sig *= 0.5; ++e2; }
        return *this;
    }

    scaled_value& operator+=(const scaled_value& o) {
        if (o.sig == 0.0) return *this;
        if (sig == 0.0) { *this = o; return *this; }
        int64_t d = e2 - o.e2;
        if (d > 1100) return *this;              // o below one ulp of this
        if (d < -1100) { *this = o; return *this; }
        double s = sig + std::ldexp(o.sig, static_cast<int>(-d));
        *this = from_parts(s, e2);
        return *this;
    }
    scaled_value& operator-=(const scaled_value& o) { return *this += -o; }

    friend scaled_value operator*(scaled_value a, const scaled_value& b) { return a *= b; }
    friend scaled_value operator*(scaled_value a, double b) { return a *= b; }
    friend scaled_value operator*(double a, scaled_value b) { return b *= a; }
    friend scaled_value operator/(scaled_value a, const scaled_value& b) { return a /= b; }
    friend scaled_value operator+(scaled_value a, const scaled_value& b) { return a += b; }
    friend scaled_value operator-(scaled_value a, const scaled_value& b) { return a -= b; }

    scaled_value sqrt() const {
        if (sig < 0.0) throw numerical_error("scaled_value: sqrt of negative");
        if (sig == 0.0) return {};
        scaled_value r;
        if (e2 % 2 == 0) { r.sig = std::sqrt(sig); r.e2 = e2 / 2; }
        else { r.sig = std::sqrt(2.0 * sig); r.e2 = (e2 - 1) / 2; }
        if (r.sig >= 2.0) { r.sig *= 0.5; ++r.e2; } // sqrt(2*1.999..) slightly over 2
        return r;
    }

    double log2_abs() const { return std::log2(std::abs(sig)) + static_cast<double>(e2); }
    double log_abs() const { return log2_abs() * 0.69314718055994530942; }

    // To double; underflow rounds to (signed) zero, overflow gives +-inf.
    double collapse() const {
        if (sig == 0.0) return 0.0;
        if (e2 > 1200) return sig > 0 ? HUGE_VAL : -HUGE_VAL;
        if (e2 < -1200) return sig > 0 ? 0.0 : -0.0;
        return std::ldexp(sig, static_cast<int>(e2));
    }
    double collapse_checked() const {
        double v = collapse();
        if (std::isinf(v)) throw numerical_error("scaled_value: overflow on collapse to double");
        return v;
    }
};

} // namespace kinspec

#endif
