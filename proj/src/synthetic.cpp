#include "explab/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "explab/rng.hpp"

namespace explab {
namespace {

std::vector<double> random_unit(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> w(dim);
    double norm = 0.0;
    while (norm < 1e-8) {
        norm = 0.0;
        for (double& v : w) {
            v = normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
    }
    for (double& v : w) {
        v /= norm;
    }
    return w;
}

// Gram-Schmidt on random draws until `count` orthonormal vectors exist.
std::vector<std::vector<double>> random_orthonormal(std::size_t count, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        auto v = random_unit(dim, rng);
        for (const auto& b : basis) {
            double proj = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                proj += v[i] * b[i];
            }
            for (std::size_t i = 0; i < dim; ++i) {
                v[i] -= proj * b[i];
            }
        }
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-6) {
            continue;
        }
        for (double& x : v) {
            x /= norm;
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace

std::string_view to_string(SyntheticKind kind) {
    switch (kind) {
    case SyntheticKind::GaussianPair: return "gaussian_pair";
    case SyntheticKind::EmbeddedAttribute: return "embedded_attribute";
    case SyntheticKind::Independent: return "independent";
    }
    return "unknown";
}

std::string_view to_string(AttributeType type) {
    return type == AttributeType::Binary ? "binary" : "continuous";
}

double gaussian_mi(double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::invalid_argument("gaussian_mi: |rho| must be < 1");
    }
    return -0.5 * std::log1p(-rho * rho);
}

double embedded_mi(double snr) {
    if (!(snr > 0.0) || !std::isfinite(snr)) {
        throw std::invalid_argument("embedded_mi: snr must be positive and finite");
    }
    return 0.5 * std::log1p(snr * snr);
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0) {
        throw std::invalid_argument("gen_synthetic: n must be >= 1");
    }
    Rng rng(spec.seed);
    std::normal_distribution<double> normal;
    std::bernoulli_distribution coin(0.5);
    SyntheticData out;

    switch (spec.kind) {
    case SyntheticKind::GaussianPair: {
        if (!(std::abs(spec.rho) < 1.0)) {
            throw std::invalid_argument("gen_synthetic: gaussian_pair requires |rho| < 1, got " +
                                        std::to_string(spec.rho));
        }
        const double noise = std::sqrt(1.0 - spec.rho * spec.rho);
        out.features = Matrix(spec.n, 1);
        out.attribute.resize(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) {
            const double f = normal(rng);
            out.features(i, 0) = f;
            out.attribute[i] = spec.rho * f + noise * normal(rng);
        }
        out.true_mi_nats = gaussian_mi(spec.rho);
        break;
    }
    case SyntheticKind::Independent: {
        if (spec.dim == 0) {
            throw std::invalid_argument("gen_synthetic: dim must be >= 1");
        }
        out.features = Matrix(spec.n, spec.dim);
        for (double& v : out.features.values()) {
            v = normal(rng);
        }
        out.attribute.resize(spec.n);
        for (double& a : out.attribute) {
            a = spec.attribute_type == AttributeType::Binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
        }
        out.true_mi_nats = 0.0;
        break;
    }
    case SyntheticKind::EmbeddedAttribute: {
        if (spec.dim == 0) {
            throw std::invalid_argument("gen_synthetic: dim must be >= 1");
        }
        if (!(spec.snr > 0.0) || !std::isfinite(spec.snr)) {
            throw std::invalid_argument("gen_synthetic: snr must be positive and finite, got " +
                                        std::to_string(spec.snr));
        }
        const auto w = random_unit(spec.dim, rng);
        const double sigma = 1.0 / spec.snr;
        out.features = Matrix(spec.n, spec.dim);
        out.attribute.resize(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) {
            const double a = spec.attribute_type == AttributeType::Binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
            out.attribute[i] = a;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                out.features(i, j) = a * w[j] + sigma * normal(rng);
            }
        }
        if (spec.attribute_type == AttributeType::Continuous) {
            out.true_mi_nats = embedded_mi(spec.snr);
        }
        break;
    }
    }
    return out;
}

EmbeddedSet gen_embedded_set(std::size_t n, std::size_t dim, std::span<const double> gains, std::uint64_t seed) {
    if (gains.empty() || gains.size() > dim) {
        throw std::invalid_argument("gen_embedded_set: need 1 <= number of attributes <= dim");
    }
    Rng rng(seed);
    std::normal_distribution<double> normal;
    const auto basis = random_orthonormal(gains.size(), dim, rng);

    EmbeddedSet out;
    out.features = Matrix(n, dim);
    out.attributes.assign(gains.size(), std::vector<double>(n));
    for (double g : gains) {
        out.true_mi_nats.push_back(embedded_mi(g));
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto row = out.features.row(i);
        for (double& v : row) {
            v = normal(rng);
        }
        for (std::size_t k = 0; k < gains.size(); ++k) {
            const double a = normal(rng);
            out.attributes[k][i] = a;
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] += gains[k] * a * basis[k][j];
            }
        }
    }
    return out;
}

} // namespace explab
