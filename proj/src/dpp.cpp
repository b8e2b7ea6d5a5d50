#include "tp2dp2/dpp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tp2dp2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSingularPivot = 1e-12;

double lattice_phase(const DppSpectralModel& m, std::size_t z, std::span<const double> x,
                     std::span<const double> y) {
    double dot = 0.0;
    for (int i = 0; i < m.dim; ++i) {
        dot += m.lattice[z * static_cast<std::size_t>(m.dim) + static_cast<std::size_t>(i)] *
               (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]);
    }
    return 2.0 * std::numbers::pi * dot;
}

Eigen::MatrixXd gram(const DppSpectralModel& m, const std::vector<Point>& unit) {
    const auto n = static_cast<Eigen::Index>(unit.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = m.diagonal;
        for (Eigen::Index j = 0; j < i; ++j) {
            K(i, j) = K(j, i) = m.kernel_unit(unit[static_cast<std::size_t>(i)], unit[static_cast<std::size_t>(j)]);
        }
    }
    return K;
}

// log det of an SPD matrix; nullopt when a pivot collapses.
std::optional<double> stable_logdet(const Eigen::MatrixXd& K, Eigen::LLT<Eigen::MatrixXd>* keep = nullptr) {
    if (K.rows() == 0) {
        return 0.0;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) {
        return std::nullopt;
    }
    const Eigen::MatrixXd L = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        const double pivot = L(i, i) * L(i, i);
        if (!(pivot > kSingularPivot * K(i, i))) {
            return std::nullopt;
        }
        logdet += std::log(pivot);
    }
    if (keep) {
        *keep = std::move(llt);
    }
    return logdet;
}

}  // namespace

bool DomainBox::contains(std::span<const double> x) const noexcept {
    if (x.size() != lo.size()) {
        return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lo[i] && x[i] <= hi[i])) {
            return false;
        }
    }
    return true;
}

Point DomainBox::to_unit(std::span<const double> x) const {
    Point z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        z[i] = (x[i] - lo[i]) / (hi[i] - lo[i]);
    }
    return z;
}

Point DomainBox::from_unit(std::span<const double> z) const {
    Point x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        x[i] = lo[i] + z[i] * (hi[i] - lo[i]);
    }
    return x;
}

void DomainBox::validate() const {
    if (lo.empty() || lo.size() != hi.size()) {
        throw ConfigError("domain box needs matching non-empty bounds");
    }
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] > 0.0) || !(hi[i] > lo[i]) || !std::isfinite(hi[i])) {
            throw ConfigError("domain box needs 0 < lo < hi in every coordinate");
        }
    }
}

DomainBox domain_box(const Dataset& data, DomainRule rule) {
    const auto D = static_cast<std::size_t>(data.num_types);
    DomainBox box;
    if (rule == DomainRule::GlobalMean) {
        const double total_time = data.total_time();
        if (!(total_time > 0.0) || data.total_events() == 0) {
            throw DatasetError("dataset has no events to derive a parameter domain from");
        }
        const double lambda = static_cast<double>(data.total_events()) / total_time;
        box.lo.assign(D, 0.5 * lambda);
        box.hi.assign(D, 2.0 * lambda);
        return box;
    }
    box.lo.assign(D, kInf);
    box.hi.assign(D, 0.0);
    bool any = false;
    for (const auto& s : data.sequences) {
        if (!(s.horizon > 0.0)) {
            continue;
        }
        any = true;
        const auto counts = s.type_counts(data.num_types);
        for (std::size_t d = 0; d < D; ++d) {
            // A type with no events still bounds its rate by about one per horizon.
            const double floor_rate = static_cast<double>(std::max<std::size_t>(counts[d], 1)) / s.horizon;
            const double rate = static_cast<double>(counts[d]) / s.horizon;
            box.lo[d] = std::min(box.lo[d], floor_rate);
            box.hi[d] = std::max(box.hi[d], rate);
        }
    }
    if (!any) {
        throw DatasetError("dataset has no positive horizon to derive a parameter domain from");
    }
    for (std::size_t d = 0; d < D; ++d) {
        box.lo[d] *= 0.5;
        box.hi[d] = std::max(2.0 * box.hi[d], 4.0 * box.lo[d]);
    }
    return box;
}

double DppSpectralModel::kernel_unit(std::span<const double> x, std::span<const double> y) const {
    double k = 0.0;
    for (std::size_t z = 0; z < phi_tilde.size(); ++z) {
        k += phi_tilde[z] * std::cos(lattice_phase(*this, z, x, y));
    }
    return k;
}

double DppSpectralModel::kernel_unit_imag(std::span<const double> x, std::span<const double> y) const {
    double k = 0.0;
    for (std::size_t z = 0; z < phi_tilde.size(); ++z) {
        k += phi_tilde[z] * std::sin(lattice_phase(*this, z, x, y));
    }
    return k;
}

nlohmann::ordered_json DppSpectralModel::summary() const {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["lattice_half_width"] = half_width;
    j["lattice_size"] = lattice_size();
    j["rho"] = rho;
    j["alpha"] = alpha;
    j["d_app"] = d_app;
    j["clipped"] = clipped;
    j["domain"] = {{"lo", domain.lo}, {"hi", domain.hi}};
    return j;
}

DppSpectralModel build_spectral_model(int q, int half_width, double rho, double alpha, DomainBox domain) {
    if (q < 1) {
        throw ConfigError("dpp dimension must be at least 1");
    }
    if (half_width < 0) {
        throw ConfigError("dpp lattice half-width must be non-negative");
    }
    if (!(rho > 0.0) || !(alpha > 0.0)) {
        throw ConfigError("dpp rho and alpha must be positive");
    }
    domain.validate();
    if (domain.dim() != static_cast<std::size_t>(q)) {
        throw ConfigError("dpp domain dimension differs from q");
    }
    DppSpectralModel m;
    m.dim = q;
    m.half_width = half_width;
    m.rho = rho;
    m.alpha = alpha;
    m.domain = std::move(domain);

    const int side = 2 * half_width + 1;
    std::size_t count = 1;
    for (int i = 0; i < q; ++i) {
        count *= static_cast<std::size_t>(side);
    }
    const double scale = rho * std::pow(std::sqrt(std::numbers::pi) * alpha, q);
    const double decay = std::numbers::pi * std::numbers::pi * alpha * alpha;
    m.lattice.reserve(count * static_cast<std::size_t>(q));
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rest = idx;
        double norm2 = 0.0;
        for (int i = 0; i < q; ++i) {
            const int z = static_cast<int>(rest % static_cast<std::size_t>(side)) - half_width;
            rest /= static_cast<std::size_t>(side);
            m.lattice.push_back(z);
            norm2 += static_cast<double>(z) * z;
        }
        double phi = scale * std::exp(-decay * norm2);
        if (phi >= kPhiCeiling) {
            phi = kPhiCeiling;
            ++m.clipped;
        }
        m.phi.push_back(phi);
        m.phi_tilde.push_back(phi / (1.0 - phi));
        m.d_app += std::log1p(m.phi_tilde.back());
        m.diagonal += m.phi_tilde.back();
    }
    return m;
}

double default_rho(int q, int half_width, double alpha, double expected_points) {
    const double decay = std::numbers::pi * std::numbers::pi * alpha * alpha;
    double axis = 0.0;
    for (int z = -half_width; z <= half_width; ++z) {
        axis += std::exp(-decay * z * z);
    }
    const double mass = std::pow(std::sqrt(std::numbers::pi) * alpha, q) * std::pow(axis, q);
    return expected_points / mass;
}

double dpp_log_density(const DppSpectralModel& model, std::span<const Point> points) {
    std::vector<Point> unit;
    unit.reserve(points.size());
    for (const auto& p : points) {
        if (!model.domain.contains(p)) {
            return -kInf;
        }
        unit.push_back(model.domain.to_unit(p));
    }
    for (std::size_t i = 0; i < unit.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(model.kernel_unit_imag(unit[i], unit[j])) > 1e-10) {
                throw NumericalError("dpp Gram matrix has a non-negligible imaginary part");
            }
        }
    }
    const auto logdet = stable_logdet(gram(model, unit));
    if (!logdet) {
        return -kInf;
    }
    return 1.0 - model.d_app + *logdet;
}

double dpp_log_ratio(const DppSpectralModel& model, std::span<const Point> base, const Point* add,
                     std::optional<std::size_t> remove) {
    if (remove && *remove >= base.size()) {
        throw std::out_of_range("dpp_log_ratio: remove index out of range");
    }
    if (!add && !remove) {
        return 0.0;
    }
    if (add && !model.domain.contains(*add)) {
        return -kInf;
    }
    std::vector<Point> core;
    core.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (remove && i == *remove) {
            continue;
        }
        if (!model.domain.contains(base[i])) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        core.push_back(model.domain.to_unit(base[i]));
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    const auto core_logdet = stable_logdet(gram(model, core), &llt);
    if (!core_logdet) {
        // Degenerate core: only the full densities carry meaning.
        std::vector<Point> after;
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (!(remove && i == *remove)) {
                after.push_back(base[i]);
            }
        }
        if (add) {
            after.push_back(*add);
        }
        return dpp_log_density(model, after) - dpp_log_density(model, base);
    }
    const auto schur = [&](const Point& x) {
        const Point ux = model.domain.to_unit(x);
        if (core.empty()) {
            return model.diagonal;
        }
        Eigen::VectorXd k(static_cast<Eigen::Index>(core.size()));
        for (std::size_t i = 0; i < core.size(); ++i) {
            k(static_cast<Eigen::Index>(i)) = model.kernel_unit(ux, core[i]);
        }
        const Eigen::VectorXd v = llt.matrixL().solve(k);
        return model.diagonal - v.squaredNorm();
    };
    const auto log_schur = [&](const Point& x) {
        const double s = schur(x);
        return s > kSingularPivot * model.diagonal ? std::log(s) : -kInf;
    };
    double delta = 0.0;
    if (add) {
        delta += log_schur(*add);
    }
    if (remove) {
        const double removed = log_schur(base[*remove]);
        if (removed == -kInf) {
            return delta == -kInf ? std::numeric_limits<double>::quiet_NaN() : kInf;
        }
        delta -= removed;
    }
    return delta;
}

}  // namespace tp2dp2
