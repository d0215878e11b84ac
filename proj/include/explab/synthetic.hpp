#pragma once

// Synthetic (features, attribute) datasets whose mutual information is known
// in closed form, used to validate the estimator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "explab/matrix.hpp"

namespace explab {

enum class SyntheticKind { GaussianPair, EmbeddedAttribute, Independent };
enum class AttributeType { Continuous, Binary };

std::string_view to_string(SyntheticKind kind);
std::string_view to_string(AttributeType type);

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::GaussianPair;
    std::size_t n = 1000;
    /// Feature dimension; gaussian_pair always produces one column.
    std::size_t dim = 1;
    double rho = 0.0;
    double snr = 1.0;
    AttributeType attribute_type = AttributeType::Continuous;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Matrix features;
    std::vector<double> attribute;
    /// Analytic MI in nats, empty when no closed form applies.
    std::optional<double> true_mi_nats;
};

/// -0.5 * ln(1 - rho^2), MI of a bivariate standard Gaussian with correlation rho.
double gaussian_mi(double rho);

/// 0.5 * ln(1 + snr^2), MI between a standard normal attribute and features
/// a * w + noise with |w| = 1 and isotropic noise of std 1 / snr.
double embedded_mi(double snr);

/// gaussian_pair: f ~ N(0,1), a = rho f + sqrt(1 - rho^2) e.
/// independent: m standard normal columns and an independent attribute
///   (standard normal, or a fair 0/1 coin when binary).
/// embedded_attribute: features = a w + e, w a random unit vector, e ~ N(0, I / snr^2).
SyntheticData gen_synthetic(const SyntheticSpec& spec);

struct EmbeddedSet {
    Matrix features;
    std::vector<std::vector<double>> attributes;
    std::vector<double> true_mi_nats;
};

/// Several independent standard normal attributes embedded along orthonormal
/// random directions of one m-dimensional feature matrix with unit noise:
///   features = sum_k gain_k a_k w_k + e.
/// Attribute k then carries exactly embedded_mi(gain_k) nats. Requires
/// gains.size() <= dim.
EmbeddedSet gen_embedded_set(std::size_t n, std::size_t dim, std::span<const double> gains, std::uint64_t seed);

} // namespace explab
