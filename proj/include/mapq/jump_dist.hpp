#pragma once

// Non-negative jump-size laws with rational Laplace-Stieltjes transforms:
// zero, exponential, Erlang and hyperexponential. A deterministic variant is
// carried for the simulator only; the analytic engine rejects it because its
// transform is not rational.

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mapq/polynomial.hpp"

namespace mapq {

class JumpDistribution {
public:
    enum class Kind { Zero, Exponential, Erlang, HyperExponential, Deterministic };

    JumpDistribution() : kind_(Kind::Zero) {}

    static JumpDistribution zero() { return JumpDistribution(); }
    static JumpDistribution exponential(double rate) {
        JumpDistribution d;
        d.kind_ = Kind::Exponential;
        d.rates_ = {rate};
        d.check();
        return d;
    }
    static JumpDistribution erlang(int shape, double rate) {
        JumpDistribution d;
        d.kind_ = Kind::Erlang;
        d.shape_ = shape;
        d.rates_ = {rate};
        d.check();
        return d;
    }
    static JumpDistribution hyperexponential(std::vector<double> weights, std::vector<double> rates) {
        JumpDistribution d;
        d.kind_ = Kind::HyperExponential;
        d.weights_ = std::move(weights);
        d.rates_ = std::move(rates);
        d.check();
        return d;
    }
    static JumpDistribution deterministic(double value) {
        JumpDistribution d;
        d.kind_ = Kind::Deterministic;
        d.rates_ = {value};  // reused as the point mass location
        if (value < 0.0) throw InputError("deterministic jump size must be nonnegative");
        return d;
    }

    Kind kind() const { return kind_; }
    bool is_zero() const { return kind_ == Kind::Zero; }
    bool has_rational_lst() const { return kind_ != Kind::Deterministic; }
    int shape() const { return shape_; }
    const std::vector<double>& rates() const { return rates_; }
    const std::vector<double>& weights() const { return weights_; }

    /// LST value E[e^{-a B}].
    cplx lst(cplx a) const {
        switch (kind_) {
            case Kind::Zero: return 1.0;
            case Kind::Exponential:
                check_pole(a);
                return rates_[0] / (rates_[0] + a);
            case Kind::Erlang:
                check_pole(a);
                return std::pow(rates_[0] / (rates_[0] + a), shape_);
            case Kind::HyperExponential: {
                check_pole(a);
                cplx acc = 0.0;
                for (std::size_t m = 0; m < rates_.size(); ++m) acc += weights_[m] * rates_[m] / (rates_[m] + a);
                return acc;
            }
            case Kind::Deterministic: return std::exp(-a * rates_[0]);
        }
        return 1.0;
    }

    void check_pole(cplx a) const {
        for (double mu : rates_)
            if (std::abs(a + mu) < 1e-13 * (1.0 + std::abs(a)))
                throw NumericalError("exponent pole: transform evaluated at a pole of the jump LST");
    }

    /// LST as a rational function of the transform variable.
    RationalFn lst_rational() const {
        switch (kind_) {
            case Kind::Zero: return {Poly::constant(1.0), Poly::constant(1.0)};
            case Kind::Exponential:
                return {Poly::constant(rates_[0]), Poly({rates_[0], 1.0})};
            case Kind::Erlang: {
                Poly den = Poly::constant(1.0);
                for (int i = 0; i < shape_; ++i) den = den * Poly({rates_[0], 1.0});
                return {Poly::constant(std::pow(rates_[0], shape_)), den};
            }
            case Kind::HyperExponential: {
                Poly den = Poly::constant(1.0);
                for (double mu : rates_) den = den * Poly({mu, 1.0});
                Poly num = Poly::constant(0.0);
                for (std::size_t m = 0; m < rates_.size(); ++m) {
                    Poly part = Poly::constant(weights_[m] * rates_[m]);
                    for (std::size_t l = 0; l < rates_.size(); ++l)
                        if (l != m) part = part * Poly({rates_[l], 1.0});
                    num = num + part;
                }
                return {num, den};
            }
            case Kind::Deterministic:
                throw InputError("deterministic jumps have no rational transform (simulation only)");
        }
        return {Poly::constant(1.0), Poly::constant(1.0)};
    }

    double mean() const {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Exponential: return 1.0 / rates_[0];
            case Kind::Erlang: return shape_ / rates_[0];
            case Kind::HyperExponential: {
                double acc = 0.0;
                for (std::size_t m = 0; m < rates_.size(); ++m) acc += weights_[m] / rates_[m];
                return acc;
            }
            case Kind::Deterministic: return rates_[0];
        }
        return 0.0;
    }

    /// Density at y > 0 (zero/deterministic variants have no density part).
    double pdf(double y) const {
        if (y < 0.0) return 0.0;
        switch (kind_) {
            case Kind::Exponential: return rates_[0] * std::exp(-rates_[0] * y);
            case Kind::Erlang: {
                double mu = rates_[0];
                double logp = shape_ * std::log(mu) + (shape_ - 1) * std::log(std::max(y, 1e-300)) - mu * y;
                for (int k = 2; k < shape_; ++k) logp -= std::log(double(k));
                return std::exp(logp);
            }
            case Kind::HyperExponential: {
                double acc = 0.0;
                for (std::size_t m = 0; m < rates_.size(); ++m)
                    acc += weights_[m] * rates_[m] * std::exp(-rates_[m] * y);
                return acc;
            }
            default: return 0.0;
        }
    }

    /// P(B > y).
    double tail(double y) const {
        if (y < 0.0) return 1.0;
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Exponential: return std::exp(-rates_[0] * y);
            case Kind::Erlang: {
                double mu = rates_[0], term = std::exp(-mu * y), acc = term;
                for (int k = 1; k < shape_; ++k) {
                    term *= mu * y / k;
                    acc += term;
                }
                return acc;
            }
            case Kind::HyperExponential: {
                double acc = 0.0;
                for (std::size_t m = 0; m < rates_.size(); ++m) acc += weights_[m] * std::exp(-rates_[m] * y);
                return acc;
            }
            case Kind::Deterministic: return rates_[0] > y ? 1.0 : 0.0;
        }
        return 0.0;
    }

    double cdf(double y) const { return 1.0 - tail(y); }

    /// Exceedance transform over a level: int_(K,inf) P(B in dy) e^{-a (y-K)},
    /// in closed form per family.
    cplx tail_lst(double K, cplx a) const {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Exponential: {
                double mu = rates_[0];
                return std::exp(-mu * K) * mu / (mu + a);
            }
            case Kind::Erlang: {
                // int_K^inf mu^k y^{k-1} e^{-mu y}/(k-1)! e^{-a(y-K)} dy, substituting y = K + z.
                double mu = rates_[0];
                int k = shape_;
                double logfac = 0.0;
                cplx acc = 0.0;
                for (int j = 0; j <= k - 1; ++j) {
                    // binom(k-1,j) K^{k-1-j} j! / (mu+a)^{j+1}
                    double logbin = 0.0;
                    for (int i = 0; i < j; ++i) logbin += std::log(double(k - 1 - i)) - std::log(double(i + 1));
                    cplx term = std::exp(logbin) * std::pow(K, double(k - 1 - j));
                    double logjfac = 0.0;
                    for (int i = 2; i <= j; ++i) logjfac += std::log(double(i));
                    term *= std::exp(logjfac) / std::pow(mu + a, double(j + 1));
                    acc += term;
                }
                for (int i = 2; i <= k - 1; ++i) logfac += std::log(double(i));
                return acc * std::exp(k * std::log(mu) - mu * K - logfac);
            }
            case Kind::HyperExponential: {
                cplx acc = 0.0;
                for (std::size_t m = 0; m < rates_.size(); ++m)
                    acc += weights_[m] * std::exp(-rates_[m] * K) * rates_[m] / (rates_[m] + a);
                return acc;
            }
            case Kind::Deterministic: {
                double b = rates_[0];
                return b > K ? std::exp(-a * (b - K)) : cplx(0.0);
            }
        }
        return 0.0;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::Zero: os << "zero"; break;
            case Kind::Exponential: os << "exp(" << rates_[0] << ")"; break;
            case Kind::Erlang: os << "erlang(" << shape_ << "," << rates_[0] << ")"; break;
            case Kind::HyperExponential: os << "hyperexp(" << rates_.size() << " phases)"; break;
            case Kind::Deterministic: os << "det(" << rates_[0] << ")"; break;
        }
        return os.str();
    }

private:
    void check() const {
        for (double r : rates_)
            if (!(r > 0.0)) throw InputError("jump distribution rate must be strictly positive");
        if (kind_ == Kind::Erlang && shape_ < 1) throw InputError("Erlang shape must be a positive integer");
        if (kind_ == Kind::HyperExponential) {
            if (weights_.size() != rates_.size() || weights_.empty())
                throw InputError("hyperexponential weights/rates size mismatch");
            double s = 0.0;
            for (double w : weights_) {
                if (w < 0.0) throw InputError("hyperexponential weights must be nonnegative");
                s += w;
            }
            if (std::abs(s - 1.0) > 1e-12) throw InputError("hyperexponential weights must sum to 1");
        }
    }

    Kind kind_;
    int shape_ = 1;
    std::vector<double> rates_;
    std::vector<double> weights_;
};

}  // namespace mapq
