// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"
#include "lowres/parallel.hpp"
#include "lowres/quantization.hpp"
#include "lowres/rng.hpp"
#include "lowres/sinr_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace lowres {

enum class LinkState { LOS, NLOS, Outage };
enum class SchedulerKind { OfdmaPf, SdmaGreedy };
enum class UeDropMode { Poisson, Fixed };

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct UniformPlanarArray {
    int rows = 8;
    int cols = 8;
    double spacing_wl = 0.5;

    int size() const { return rows * cols; }

    // Array in the y-z plane with broadside along +x. Unit-modulus entries, so |a|^2 = size().
    Eigen::VectorXcd steering(double az, double el) const
    {
        Eigen::VectorXcd a(size());
        const double k = 2.0 * std::numbers::pi * spacing_wl;
        const cplx step_c = std::polar(1.0, k * std::sin(az) * std::cos(el));
        const cplx step_r = std::polar(1.0, k * std::sin(el));
        cplx row = 1.0;
        for (int r = 0; r < rows; ++r) {
            cplx x = row;
            for (int c = 0; c < cols; ++c) {
                a(r * cols + c) = x;
                x *= step_c;
            }
            row *= step_r;
        }
        return a;
    }
};

struct PathlossParams {
    double los_a = 61.4;
    double los_b = 2.0;
    double los_sigma_db = 5.8;
    double nlos_a = 72.0;
    double nlos_b = 2.92;
    double nlos_sigma_db = 8.7;
    double los_decay_m = 67.1;
    double outage_slope_per_m = 1.0 / 30.0;
    double outage_offset = 5.2;
    double fc_hz = 28e9;
    bool clamp_free_space = true;
};

struct ClusterParams {
    double mean_extra_clusters = 2.0;  // cluster count is Poisson(mean) + 1
    double power_decay = 1.0;          // cluster c carries power proportional to exp(-decay * c)
    double elevation_spread_deg = 5.0; // spread of cluster centres around the geometric elevation
    // Rays per cluster and their rms offsets around the cluster centre. Zero spread with one
    // ray gives a rank-1 contribution per cluster.
    int rays_per_cluster = 20;
    double az_spread_tx_deg = 10.2;
    double el_spread_tx_deg = 0.0;
    double az_spread_rx_deg = 15.5;
    double el_spread_rx_deg = 6.0;
};

struct NetworkConfig {
    double area_m = 1000.0;
    double cell_radius_m = 100.0;
    double fc_hz = 28e9;
    double bw_hz = 1e9;
    double tx_power_dbm = 35.0;
    double noise_figure_db = 8.0;
    double noise_psd_dbm_hz = -174.0;
    double max_se_bps_hz = 7.4063;
    UniformPlanarArray bs_array{8, 8, 0.5};
    UniformPlanarArray ue_array{4, 4, 0.5};
    double tti_s = 125e-6;
    double overhead = 0.20;
    double shannon_loss_db = 3.0;
    double mean_ues_per_cell = 10.0;
    UeDropMode ue_drop_mode = UeDropMode::Poisson;
    double min_ue_distance_m = 10.0;
    double bs_height_m = 10.0;
    double ue_height_m = 1.5;
    Resolution n_adc_bits = Resolution::infinite();
    std::optional<double> alpha_override;
    int n_beams_max = 1;
    SchedulerKind scheduler = SchedulerKind::OfdmaPf;
    int n_ttis = 200;
    std::uint64_t seed = 1;
    double pf_epsilon_bits = 1.0;
    bool scheduler_knows_quantization = false;
    PathlossParams pathloss{};
    ClusterParams clusters{};

    void validate() const
    {
        if (!(area_m > 0.0) || !(cell_radius_m > 0.0))
            throw InvalidArgument("area and cell radius must be positive");
        if (!(bw_hz > 0.0))
            throw InvalidArgument("bandwidth must be positive");
        if (!(fc_hz > 0.0))
            throw InvalidArgument("carrier frequency must be positive");
        if (!(max_se_bps_hz > 0.0))
            throw InvalidArgument("max spectral efficiency must be positive");
        if (bs_array.rows < 1 || bs_array.cols < 1 || ue_array.rows < 1 || ue_array.cols < 1)
            throw InvalidArgument("arrays need at least one element");
        if (!(tti_s > 0.0))
            throw InvalidArgument("TTI must be positive");
        if (!(overhead >= 0.0 && overhead < 1.0))
            throw InvalidArgument("overhead must lie in [0, 1)");
        if (!(mean_ues_per_cell >= 0.0))
            throw InvalidArgument("mean UEs per cell must be nonnegative");
        if (!(min_ue_distance_m >= 0.0 && min_ue_distance_m < cell_radius_m))
            throw InvalidArgument("minimum UE distance must lie in [0, cell radius)");
        if (n_beams_max < 1)
            throw InvalidArgument("n_beams_max must be at least 1");
        if (n_ttis < 1)
            throw InvalidArgument("n_ttis must be at least 1");
        if (!(pf_epsilon_bits > 0.0))
            throw InvalidArgument("PF cold-start epsilon must be positive");
        if (!(clusters.mean_extra_clusters >= 0.0) || !(clusters.power_decay >= 0.0) ||
            !(clusters.elevation_spread_deg >= 0.0) || clusters.rays_per_cluster < 1 ||
            !(clusters.az_spread_tx_deg >= 0.0) || !(clusters.el_spread_tx_deg >= 0.0) ||
            !(clusters.az_spread_rx_deg >= 0.0) || !(clusters.el_spread_rx_deg >= 0.0))
            throw InvalidArgument("cluster parameters must be nonnegative");
        if (!(pathloss.los_decay_m > 0.0))
            throw InvalidArgument("LOS decay distance must be positive");
    }

    double alpha() const { return alpha_override ? *alpha_override : alpha_of(n_adc_bits); }
    double noise_mw() const { return dbm_to_mw(noise_psd_dbm_hz + noise_figure_db + 10.0 * std::log10(bw_hz)); }
};

// ---- channel model ---------------------------------------------------------------------

inline double free_space_pathloss_db(double d_m, double fc_hz)
{
    return 20.0 * std::log10(4.0 * std::numbers::pi * d_m * fc_hz / 299792458.0);
}

inline double outage_probability(double d_m, const PathlossParams &p)
{
    return std::max(0.0, 1.0 - std::exp(-p.outage_slope_per_m * d_m + p.outage_offset));
}

inline double los_probability(double d_m, const PathlossParams &p)
{
    return (1.0 - outage_probability(d_m, p)) * std::exp(-d_m / p.los_decay_m);
}

inline LinkState draw_link_state(double d_m, const PathlossParams &p, Rng &rng)
{
    const double p_out = outage_probability(d_m, p);
    const double p_los = los_probability(d_m, p);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < p_out)
        return LinkState::Outage;
    if (u < p_out + p_los)
        return LinkState::LOS;
    return LinkState::NLOS;
}

// Pathloss for a given standard-normal shadowing draw.
inline double pathloss_db(double d_m, LinkState state, const PathlossParams &p, double shadow_z)
{
    if (!(d_m > 0.0))
        throw InvalidArgument("pathloss distance must be positive");
    if (state == LinkState::Outage)
        return std::numeric_limits<double>::infinity();
    const bool los = state == LinkState::LOS;
    const double a = los ? p.los_a : p.nlos_a;
    const double b = los ? p.los_b : p.nlos_b;
    const double sigma = los ? p.los_sigma_db : p.nlos_sigma_db;
    double pl = a + 10.0 * b * std::log10(d_m) + sigma * shadow_z;
    if (p.clamp_free_space)
        pl = std::max(pl, free_space_pathloss_db(d_m, p.fc_hz));
    return pl;
}

inline double pathloss_db(double d_m, LinkState state, const PathlossParams &p, Rng &rng)
{
    const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
    return pathloss_db(d_m, state, p, z);
}

// One propagation ray; a cluster is a group of rays sharing a centre direction.
struct Ray {
    double power = 0.0;
    double az_tx = 0.0, el_tx = 0.0;
    double az_rx = 0.0, el_rx = 0.0;
};

struct LinkGeometry {
    double az_tx = 0.0, el_tx = 0.0;  // departure direction at the BS
    double az_rx = 0.0, el_rx = 0.0;  // arrival direction at the UE
    bool los = false;
};

inline LinkGeometry link_geometry(Vec2 bs, Vec2 ue, double bs_h, double ue_h, bool los)
{
    const double dx = ue.x - bs.x, dy = ue.y - bs.y;
    const double d = std::max(std::hypot(dx, dy), 1e-6);
    const double el = std::atan2(bs_h - ue_h, d);
    LinkGeometry g;
    g.az_tx = std::atan2(dy, dx);
    g.el_tx = -el;
    g.az_rx = std::atan2(-dy, -dx);
    g.el_rx = el;
    g.los = los;
    return g;
}

// Rays of Poisson(mean)+1 clusters. Cluster 0 of a LOS link points along the geometric
// direction; other cluster centres are uniform in azimuth. Ray powers sum to 1.
inline std::vector<Ray> draw_rays(const LinkGeometry &g, const ClusterParams &cp, Rng &rng)
{
    if (cp.rays_per_cluster < 1)
        throw InvalidArgument("rays_per_cluster must be at least 1");
    constexpr double deg = std::numbers::pi / 180.0;
    const int n = 1 + std::poisson_distribution<int>(cp.mean_extra_clusters)(rng);
    std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(n * cp.rays_per_cluster));
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
        Ray centre;
        if (c == 0 && g.los) {
            centre.az_tx = g.az_tx;
            centre.el_tx = g.el_tx;
            centre.az_rx = g.az_rx;
            centre.el_rx = g.el_rx;
        } else {
            centre.az_tx = az(rng);
            centre.el_tx = g.el_tx + cp.elevation_spread_deg * deg * z(rng);
            centre.az_rx = az(rng);
            centre.el_rx = g.el_rx + cp.elevation_spread_deg * deg * z(rng);
        }
        const double p = std::exp(-cp.power_decay * c);
        total += p;
        for (int r = 0; r < cp.rays_per_cluster; ++r) {
            Ray ray = centre;
            ray.power = p / cp.rays_per_cluster;
            if (cp.rays_per_cluster > 1) {
                ray.az_tx += cp.az_spread_tx_deg * deg * z(rng);
                ray.el_tx += cp.el_spread_tx_deg * deg * z(rng);
                ray.az_rx += cp.az_spread_rx_deg * deg * z(rng);
                ray.el_rx += cp.el_spread_rx_deg * deg * z(rng);
            }
            rays.push_back(ray);
        }
    }
    for (auto &r : rays)
        r.power /= total;
    return rays;
}

// Q = N * sum_c p_c a_c a_c^H / |a_c|^2 with sum p_c = 1, so trace(Q) = N.
inline Eigen::MatrixXcd covariance_from_rays(const std::vector<Ray> &rays, const UniformPlanarArray &arr,
                                                 bool tx_side)
{
    const int n = arr.size();
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
    for (const auto &c : rays) {
        const Eigen::VectorXcd a =
            tx_side ? arr.steering(c.az_tx, c.el_tx) : arr.steering(c.az_rx, c.el_rx);
        q.noalias() += c.power * (a * a.adjoint());
    }
    return q;
}

struct CovariancePair {
    Eigen::MatrixXcd tx;
    Eigen::MatrixXcd rx;
    std::vector<Ray> rays;
};

inline CovariancePair generate_covariances(const LinkGeometry &g, const UniformPlanarArray &bs_array,
                                           const UniformPlanarArray &ue_array, const ClusterParams &cp, Rng &rng)
{
    CovariancePair out;
    out.rays = draw_rays(g, cp, rng);
    out.tx = covariance_from_rays(out.rays, bs_array, true);
    out.rx = covariance_from_rays(out.rays, ue_array, false);
    return out;
}

// Unit-norm dominant eigenvector. When the top eigenvalue is repeated, the projection of the
// lowest-index basis vector onto the top eigenspace is returned. The phase is fixed by making
// the largest-magnitude entry real and positive.
inline Eigen::VectorXcd dominant_eigenvector(const Eigen::MatrixXcd &q, double *eigenvalue = nullptr)
{
    if (q.rows() == 0 || q.rows() != q.cols())
        throw InvalidArgument("dominant_eigenvector: need a nonempty square matrix");
    if (q.norm() == 0.0)
        throw DegenerateInput("dominant_eigenvector: zero matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q);
    if (es.info() != Eigen::Success)
        throw DomainError("dominant_eigenvector: eigensolver failed");
    const auto &vals = es.eigenvalues();
    const auto &vecs = es.eigenvectors();
    const Eigen::Index n = q.rows();
    const double top = vals(n - 1);
    const double tol = 1e-9 * std::max(1.0, std::abs(top));
    Eigen::Index first = n - 1;
    while (first > 0 && top - vals(first - 1) <= tol)
        --first;
    Eigen::VectorXcd v;
    if (first == n - 1) {
        v = vecs.col(n - 1);
    } else {
        const auto basis = vecs.middleCols(first, n - first);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
            e(i) = 1.0;
            v = basis * (basis.adjoint() * e);
            if (v.norm() > 1e-6)
                break;
        }
    }
    v.normalize();
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(v(i)) > std::abs(v(imax)) + 1e-12)
            imax = i;
    v *= std::conj(v(imax)) / std::abs(v(imax));
    if (eigenvalue)
        *eigenvalue = top;
    return v;
}

struct Beams {
    Eigen::VectorXcd v;  // transmit
    Eigen::VectorXcd u;  // receive
    double g_tx = 0.0;   // v^H Q_tx v
    double g_rx = 0.0;   // u^H Q_rx u, the receive gain G_k
};

inline double quadratic_form(const Eigen::MatrixXcd &q, const Eigen::VectorXcd &x)
{
    return (x.adjoint() * q * x)(0, 0).real();
}

inline Beams longterm_beams(const Eigen::MatrixXcd &cov_tx, const Eigen::MatrixXcd &cov_rx)
{
    Beams b;
    b.v = dominant_eigenvector(cov_tx);
    b.u = dominant_eigenvector(cov_rx);
    b.g_tx = quadratic_form(cov_tx, b.v);
    b.g_rx = quadratic_form(cov_rx, b.u);
    return b;
}

// Sum_c p_c |a_c^H x|^2 without forming Q.
inline double ray_gain(const std::vector<Ray> &rays, const UniformPlanarArray &arr, bool tx_side,
                           const Eigen::VectorXcd &x)
{
    double g = 0.0;
    for (const auto &c : rays) {
        const Eigen::VectorXcd a = tx_side ? arr.steering(c.az_tx, c.el_tx) : arr.steering(c.az_rx, c.el_rx);
        g += c.power * std::norm(a.dot(x));
    }
    return g;
}

// ---- layout ----------------------------------------------------------------------------

struct NetworkDrop {
    std::vector<Vec2> bs_positions;
    std::vector<bool> bs_interior;
    std::vector<Vec2> ue_positions;
    std::vector<int> ue_cell;      // hexagon the UE was dropped in
    std::vector<int> association;  // serving BS, -1 when every link is in outage
    std::vector<std::vector<LinkState>> link_state;  // [ue][bs]
    std::vector<std::vector<double>> pathloss_db;    // [ue][bs]
    std::vector<std::vector<std::vector<Ray>>> rays;  // [ue][bs]
    std::vector<Eigen::MatrixXcd> cov_tx;  // [ue], serving link
    std::vector<Eigen::MatrixXcd> cov_rx;  // [ue], serving link

    std::size_t n_bs() const { return bs_positions.size(); }
    std::size_t n_ue() const { return ue_positions.size(); }
};

// Pointy-top hexagonal sites: rows 1.5 R apart, sites sqrt(3) R apart, odd rows offset by
// half a spacing. A site is interior when all six neighbours exist.
inline void hex_sites(double area_m, double radius_m, std::vector<Vec2> &sites, std::vector<bool> &interior)
{
    const double isd = std::sqrt(3.0) * radius_m;
    const double row_step = 1.5 * radius_m;
    sites.clear();
    for (int row = 0;; ++row) {
        const double y = 0.5 * radius_m + row * row_step;
        if (y > area_m)
            break;
        const double x0 = (row % 2 == 0) ? 0.5 * isd : isd;
        for (double x = x0; x <= area_m; x += isd)
            sites.push_back({x, y});
    }
    interior.assign(sites.size(), false);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        int neighbours = 0;
        for (std::size_t j = 0; j < sites.size(); ++j)
            if (i != j && std::abs(distance(sites[i], sites[j]) - isd) < 1e-6 * isd)
                ++neighbours;
        interior[i] = neighbours == 6;
    }
}

inline bool inside_hexagon(double dx, double dy, double r)
{
    const double ax = std::abs(dx), ay = std::abs(dy);
    const double half_w = 0.5 * std::sqrt(3.0) * r;
    return ax <= half_w && ay <= r - ax / std::sqrt(3.0);
}

// Sites and UE positions only; channels are left empty.
inline NetworkDrop place_nodes(const NetworkConfig &cfg, std::uint64_t seed)
{
    cfg.validate();
    NetworkDrop drop;
    hex_sites(cfg.area_m, cfg.cell_radius_m, drop.bs_positions, drop.bs_interior);

    Rng place_rng = make_rng(seed, 101);
    const double r = cfg.cell_radius_m;
    std::uniform_real_distribution<double> ux(-0.5 * std::sqrt(3.0) * r, 0.5 * std::sqrt(3.0) * r);
    std::uniform_real_distribution<double> uy(-r, r);
    std::poisson_distribution<int> count(cfg.mean_ues_per_cell);
    for (std::size_t b = 0; b < drop.n_bs(); ++b) {
        const int n = cfg.ue_drop_mode == UeDropMode::Poisson
                          ? count(place_rng)
                          : static_cast<int>(std::lround(cfg.mean_ues_per_cell));
        for (int i = 0; i < n; ++i) {
            double dx = 0.0, dy = 0.0;
            do {
                dx = ux(place_rng);
                dy = uy(place_rng);
            } while (!inside_hexagon(dx, dy, r) || std::hypot(dx, dy) < cfg.min_ue_distance_m);
            drop.ue_positions.push_back({drop.bs_positions[b].x + dx, drop.bs_positions[b].y + dy});
            drop.ue_cell.push_back(static_cast<int>(b));
        }
    }
    return drop;
}

inline NetworkDrop generate_layout(const NetworkConfig &cfg, std::uint64_t seed)
{
    NetworkDrop drop = place_nodes(cfg, seed);
    Rng channel_rng = make_rng(seed, 102);
    const std::size_t nu = drop.n_ue(), nb = drop.n_bs();
    drop.link_state.assign(nu, std::vector<LinkState>(nb));
    drop.pathloss_db.assign(nu, std::vector<double>(nb));
    drop.rays.assign(nu, std::vector<std::vector<Ray>>(nb));
    drop.association.assign(nu, -1);
    for (std::size_t u = 0; u < nu; ++u) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < nb; ++b) {
            const double d2 = distance(drop.ue_positions[u], drop.bs_positions[b]);
            const double d3 = std::hypot(d2, cfg.bs_height_m - cfg.ue_height_m);
            const LinkState s = draw_link_state(d2, cfg.pathloss, channel_rng);
            const double pl = pathloss_db(d3, s, cfg.pathloss, channel_rng);
            drop.link_state[u][b] = s;
            drop.pathloss_db[u][b] = pl;
            if (s != LinkState::Outage) {
                const auto g = link_geometry(drop.bs_positions[b], drop.ue_positions[u], cfg.bs_height_m,
                                             cfg.ue_height_m, s == LinkState::LOS);
                drop.rays[u][b] = draw_rays(g, cfg.clusters, channel_rng);
            }
            if (pl < best) {
                best = pl;
                drop.association[u] = static_cast<int>(b);
            }
        }
    }

    drop.cov_tx.resize(nu);
    drop.cov_rx.resize(nu);
    for (std::size_t u = 0; u < nu; ++u) {
        const int b = drop.association[u];
        if (b < 0)
            continue;
        const auto &cl = drop.rays[u][static_cast<std::size_t>(b)];
        drop.cov_tx[u] = covariance_from_rays(cl, cfg.bs_array, true);
        drop.cov_rx[u] = covariance_from_rays(cl, cfg.ue_array, false);
    }
    return drop;
}

// ---- schedulers ------------------------------------------------------------------------

struct SchedulerState {
    std::vector<double> served_bits;
    long tti_index = 0;

    SchedulerState() = default;
    SchedulerState(std::size_t n_ue, double epsilon_bits) : served_bits(n_ue, epsilon_bits) {}

    void add_bits(std::size_t ue, double bits)
    {
        if (!(bits >= 0.0))
            throw InvalidArgument("served bits must be nonnegative");
        served_bits[ue] += bits;
    }
};

inline double rate_from_sinr(double sinr_linear, double w_hz, const NetworkConfig &cfg)
{
    if (!(sinr_linear >= 0.0))
        throw InvalidArgument("rate_from_sinr: SINR must be nonnegative");
    const double se = std::min(cfg.max_se_bps_hz, std::log2(1.0 + sinr_linear / db_to_linear(cfg.shannon_loss_db)));
    return (1.0 - cfg.overhead) * w_hz * se;
}

inline double spectral_efficiency(double sinr_linear, const NetworkConfig &cfg)
{
    return std::min(cfg.max_se_bps_hz, std::log2(1.0 + sinr_linear / db_to_linear(cfg.shannon_loss_db)));
}

// Bandwidth per listed UE from the proportional-fair weights rho / served. The last share is
// the remainder, so the shares sum to w_total.
inline std::vector<double> schedule_ofdma_pf(const SchedulerState &state, const std::vector<std::size_t> &ues,
                                             const std::vector<double> &spectral_effs, double w_total)
{
    if (ues.size() != spectral_effs.size())
        throw InvalidArgument("schedule_ofdma_pf: one spectral efficiency per UE");
    std::vector<double> w(ues.size(), 0.0);
    if (ues.empty())
        return w;
    double sum = 0.0;
    for (std::size_t i = 0; i < ues.size(); ++i) {
        if (!(spectral_effs[i] >= 0.0))
            throw InvalidArgument("schedule_ofdma_pf: spectral efficiency must be nonnegative");
        w[i] = spectral_effs[i] / state.served_bits[ues[i]];
        sum += w[i];
    }
    if (sum <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0);
        sum = static_cast<double>(w.size());
    }
    double assigned = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        w[i] = w[i] / sum * w_total;
        assigned += w[i];
    }
    w.back() = std::max(0.0, w_total - assigned);
    return w;
}

// Candidate description for the greedy SDMA scheduler at one BS. gamma_full[i] is the SNR of
// candidate i when served alone with full power; cross[i][j] = v_j^H Q_i v_j / v_i^H Q_i v_i.
struct SdmaCandidates {
    std::vector<double> gamma_full;
    std::vector<double> g_rx;
    std::vector<std::vector<double>> cross;
    double alpha = 0.0;
};

inline double sdma_group_sinr(const SdmaCandidates &c, const std::vector<std::size_t> &group, std::size_t member)
{
    const double k = static_cast<double>(group.size());
    const std::size_t m = group[member];
    double psi = 0.0;
    for (std::size_t j = 0; j < group.size(); ++j)
        if (j != member)
            psi += c.cross[m][group[j]];
    return sinr_sdma_quantized({c.gamma_full[m] / k, std::max(1.0, c.g_rx[m]), psi}, c.alpha);
}

inline double sdma_sum_se(const SdmaCandidates &c, const std::vector<std::size_t> &group, const NetworkConfig &cfg)
{
    double s = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i)
        s += spectral_efficiency(sdma_group_sinr(c, group, i), cfg);
    return s;
}

// Returns local candidate indices. The first member maximises rho / served; each further
// admission must strictly increase the modelled sum rate.
inline std::vector<std::size_t> schedule_sdma_greedy(const SchedulerState &state, const std::vector<std::size_t> &ues,
                                                     const SdmaCandidates &c, int n_beams_max,
                                                     const NetworkConfig &cfg)
{
    if (n_beams_max < 1)
        throw InvalidArgument("n_beams_max must be at least 1");
    const std::size_t n = ues.size();
    if (c.gamma_full.size() != n || c.g_rx.size() != n || c.cross.size() != n)
        throw InvalidArgument("schedule_sdma_greedy: candidate model does not match the UE list");
    std::vector<std::size_t> group;
    if (n == 0)
        return group;
    std::size_t first = 0;
    double best_w = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = spectral_efficiency(c.gamma_full[i], cfg) / state.served_bits[ues[i]];
        if (w > best_w) {
            best_w = w;
            first = i;
        }
    }
    group.push_back(first);
    double current = sdma_sum_se(c, group, cfg);
    std::vector<bool> used(n, false);
    used[first] = true;
    while (static_cast<int>(group.size()) < n_beams_max) {
        double best = current;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i])
                continue;
            auto trial = group;
            trial.push_back(i);
            const double s = sdma_sum_se(c, trial, cfg);
            if (s > best) {
                best = s;
                pick = i;
            }
        }
        if (pick == n)
            break;
        group.push_back(pick);
        used[pick] = true;
        current = best;
    }
    return group;
}

// ---- drop simulation -------------------------------------------------------------------

struct UeResult {
    std::size_t ue = 0;
    int serving_bs = -1;
    double sinr_db = std::numeric_limits<double>::quiet_NaN();  // mean over scheduled TTIs
    double rate_bps = 0.0;                                      // mean over all TTIs
    Resolution n_bits;
    int scheduled_ttis = 0;
};

struct DropResult {
    std::vector<UeResult> ues;            // UEs served by interior BSs
    std::vector<std::size_t> beam_usage;  // [k] = BS-TTIs with k scheduled beams, interior BSs
    // Per-TTI post-quantization SINR of reported UEs (linear, NaN when not scheduled); filled on request.
    std::vector<std::vector<double>> tti_sinr;
};

namespace detail {

struct DropChannels {
    std::vector<Beams> beams;                      // [ue], serving link
    std::vector<std::vector<std::size_t>> served;  // [bs] -> UEs
    std::vector<double> signal_mw;                 // [ue] P * L * g_tx * g_rx at full power
    // [ue][bs]: P * L * g_rx(victim beam) for interfering links, and g_tx of each of that BS's
    // UE beams through the victim's transmit-side clusters.
    std::vector<std::vector<double>> interf_scale;
    std::vector<std::vector<std::vector<double>>> interf_gtx;
    std::vector<std::vector<std::vector<double>>> cross;  // [bs][i][j] local indices
};

inline DropChannels prepare_channels(const NetworkConfig &cfg, const NetworkDrop &drop)
{
    DropChannels ch;
    const std::size_t nu = drop.n_ue(), nb = drop.n_bs();
    const double p_mw = dbm_to_mw(cfg.tx_power_dbm);
    ch.beams.resize(nu);
    ch.served.assign(nb, {});
    ch.signal_mw.assign(nu, 0.0);
    for (std::size_t u = 0; u < nu; ++u) {
        const int b = drop.association[u];
        if (b < 0)
            continue;
        ch.beams[u] = longterm_beams(drop.cov_tx[u], drop.cov_rx[u]);
        ch.served[static_cast<std::size_t>(b)].push_back(u);
        ch.signal_mw[u] = p_mw * db_to_linear(-drop.pathloss_db[u][static_cast<std::size_t>(b)]) * ch.beams[u].g_tx *
                          ch.beams[u].g_rx;
    }
    std::vector<Eigen::MatrixXcd> beam_mat(nb);  // [bs]: transmit beams of its UEs as columns
    for (std::size_t b = 0; b < nb; ++b) {
        beam_mat[b].resize(cfg.bs_array.size(), static_cast<Eigen::Index>(ch.served[b].size()));
        for (std::size_t i = 0; i < ch.served[b].size(); ++i)
            beam_mat[b].col(static_cast<Eigen::Index>(i)) = ch.beams[ch.served[b][i]].v;
    }
    ch.interf_scale.assign(nu, std::vector<double>(nb, 0.0));
    ch.interf_gtx.assign(nu, std::vector<std::vector<double>>(nb));
    for (std::size_t u = 0; u < nu; ++u) {
        const int own = drop.association[u];
        if (own < 0)
            continue;
        for (std::size_t b = 0; b < nb; ++b) {
            if (static_cast<int>(b) == own || drop.link_state[u][b] == LinkState::Outage)
                continue;
            const auto &rays = drop.rays[u][b];
            const double grx = ray_gain(rays, cfg.ue_array, false, ch.beams[u].u);
            ch.interf_scale[u][b] = p_mw * db_to_linear(-drop.pathloss_db[u][b]) * grx;
            if (ch.served[b].empty())
                continue;
            Eigen::MatrixXcd a(cfg.bs_array.size(), static_cast<Eigen::Index>(rays.size()));
            Eigen::VectorXd pw(static_cast<Eigen::Index>(rays.size()));
            for (std::size_t r = 0; r < rays.size(); ++r) {
                a.col(static_cast<Eigen::Index>(r)) = cfg.bs_array.steering(rays[r].az_tx, rays[r].el_tx);
                pw(static_cast<Eigen::Index>(r)) = rays[r].power;
            }
            const Eigen::VectorXd g = (a.adjoint() * beam_mat[b]).cwiseAbs2().transpose() * pw;
            ch.interf_gtx[u][b].assign(g.data(), g.data() + g.size());
        }
    }
    ch.cross.assign(nb, {});
    for (std::size_t b = 0; b < nb; ++b) {
        const auto &s = ch.served[b];
        auto &x = ch.cross[b];
        x.assign(s.size(), std::vector<double>(s.size(), 0.0));
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (i != j)
                    x[i][j] = quadratic_form(drop.cov_tx[s[i]], ch.beams[s[j]].v) / ch.beams[s[i]].g_tx;
    }
    return ch;
}

} // namespace detail

struct DropOptions {
    bool record_tti_sinr = false;
};

// Runs one drop and evaluates every resolution in `resolutions` on the same schedule. The
// scheduler sees unquantized SINR unless cfg.scheduler_knows_quantization is set, in which case
// it uses the first resolution.
inline std::vector<DropResult> run_drop_multi(const NetworkConfig &cfg, const NetworkDrop &drop,
                                              const std::vector<Resolution> &resolutions,
                                              const DropOptions &opt = {})
{
    cfg.validate();
    if (resolutions.empty())
        throw InvalidArgument("run_drop_multi: need at least one resolution");
    const auto ch = detail::prepare_channels(cfg, drop);
    const std::size_t nu = drop.n_ue(), nb = drop.n_bs(), nr = resolutions.size();
    const double noise = cfg.noise_mw();
    const bool sdma = cfg.scheduler == SchedulerKind::SdmaGreedy;
    const int max_beams = sdma ? cfg.n_beams_max : 1;

    std::vector<double> alphas(nr);
    for (std::size_t r = 0; r < nr; ++r)
        alphas[r] = (cfg.alpha_override && resolutions[r] == cfg.n_adc_bits) ? *cfg.alpha_override
                                                                              : alpha_of(resolutions[r]);
    const double sched_alpha = cfg.scheduler_knows_quantization ? alphas[0] : 0.0;

    std::vector<std::size_t> reported;
    for (std::size_t u = 0; u < nu; ++u)
        if (drop.association[u] >= 0 && drop.bs_interior[static_cast<std::size_t>(drop.association[u])])
            reported.push_back(u);

    SchedulerState state(nu, cfg.pf_epsilon_bits);
    std::vector<double> interference(nu, 0.0);  // previous TTI, for the scheduler's estimates
    std::vector<std::vector<double>> share(nb); // per BS, per served UE: power/bandwidth fraction
    std::vector<std::vector<double>> sinr_sum(nr, std::vector<double>(nu, 0.0));
    std::vector<std::vector<double>> bits(nr, std::vector<double>(nu, 0.0));
    std::vector<int> sched_count(nu, 0);
    std::vector<std::size_t> beam_usage(static_cast<std::size_t>(max_beams) + 1, 0);
    std::vector<DropResult> out(nr);
    if (opt.record_tti_sinr)
        for (auto &o : out)
            o.tti_sinr.assign(reported.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_ttis)));

    std::vector<double> cur_interf(nu, 0.0);
    for (int t = 0; t < cfg.n_ttis; ++t) {
        state.tti_index = t;
        // 1. Schedule every BS from last TTI's interference estimate.
        std::vector<std::vector<std::size_t>> groups(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const auto &s = ch.served[b];
            share[b].assign(s.size(), 0.0);
            if (s.empty())
                continue;
            std::vector<double> gamma_full(s.size());
            for (std::size_t i = 0; i < s.size(); ++i)
                gamma_full[i] = ch.signal_mw[s[i]] / (noise + interference[s[i]]);
            if (!sdma) {
                std::vector<double> se(s.size());
                for (std::size_t i = 0; i < s.size(); ++i)
                    se[i] = spectral_efficiency(
                        sinr_orthogonal_quantized(gamma_full[i], sched_alpha, std::max(1.0, ch.beams[s[i]].g_rx)),
                        cfg);
                const auto w = schedule_ofdma_pf(state, s, se, cfg.bw_hz);
                for (std::size_t i = 0; i < s.size(); ++i) {
                    share[b][i] = w[i] / cfg.bw_hz;
                    if (w[i] > 0.0)
                        groups[b].push_back(i);
                }
            } else {
                SdmaCandidates c;
                c.gamma_full = gamma_full;
                c.alpha = sched_alpha;
                c.cross = ch.cross[b];
                for (std::size_t i : s)
                    c.g_rx.push_back(ch.beams[i].g_rx);
                groups[b] = schedule_sdma_greedy(state, s, c, max_beams, cfg);
                for (std::size_t i : groups[b])
                    share[b][i] = 1.0 / static_cast<double>(groups[b].size());
            }
            if (drop.bs_interior[b])
                ++beam_usage[sdma ? groups[b].size() : 1];
        }
        // 2. Expected inter-cell interference under the current schedules.
        for (std::size_t u = 0; u < nu; ++u) {
            const int own = drop.association[u];
            if (own < 0)
                continue;
            double acc = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                const double scale = ch.interf_scale[u][b];
                if (scale == 0.0)
                    continue;
                const auto &g = ch.interf_gtx[u][b];
                double sum = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    sum += share[b][i] * g[i];
                acc += scale * sum;
            }
            cur_interf[u] = acc;
        }
        // 3. SINR and rate of the scheduled UEs.
        for (std::size_t b = 0; b < nb; ++b) {
            const auto &s = ch.served[b];
            const auto &grp = groups[b];
            for (std::size_t gi = 0; gi < grp.size(); ++gi) {
                const std::size_t li = grp[gi];
                const std::size_t u = s[li];
                const double g_rx = std::max(1.0, ch.beams[u].g_rx);
                const double denom = noise + cur_interf[u];
                double psi = 0.0;
                if (sdma)
                    for (std::size_t gj = 0; gj < grp.size(); ++gj)
                        if (gj != gi)
                            psi += ch.cross[b][li][grp[gj]];
                const double power_share = sdma ? share[b][li] : 1.0;
                const double gamma = power_share * ch.signal_mw[u] / denom;
                const double w_hz = sdma ? cfg.bw_hz : share[b][li] * cfg.bw_hz;
                // Nominal (unquantized) data drives the PF history.
                const double sinr_nominal = sdma ? sinr_sdma_quantized({gamma, g_rx, psi}, sched_alpha)
                                                 : sinr_orthogonal_quantized(gamma, sched_alpha, g_rx);
                state.add_bits(u, rate_from_sinr(sinr_nominal, w_hz, cfg) * cfg.tti_s);
                ++sched_count[u];
                for (std::size_t r = 0; r < nr; ++r) {
                    const double sinr = sdma ? sinr_sdma_quantized({gamma, g_rx, psi}, alphas[r])
                                             : sinr_orthogonal_quantized(gamma, alphas[r], g_rx);
                    sinr_sum[r][u] += sinr;
                    bits[r][u] += rate_from_sinr(sinr, w_hz, cfg) * cfg.tti_s;
                }
            }
        }
        if (opt.record_tti_sinr) {
            for (std::size_t r = 0; r < nr; ++r)
                for (std::size_t k = 0; k < reported.size(); ++k)
                    out[r].tti_sinr[k][static_cast<std::size_t>(t)] = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t li : groups[b]) {
                    const std::size_t u = ch.served[b][li];
                    const auto it = std::lower_bound(reported.begin(), reported.end(), u);
                    if (it == reported.end() || *it != u)
                        continue;
                    const auto k = static_cast<std::size_t>(it - reported.begin());
                    const double g_rx = std::max(1.0, ch.beams[u].g_rx);
                    const double denom = noise + cur_interf[u];
                    double psi = 0.0;
                    if (sdma)
                        for (std::size_t lj : groups[b])
                            if (lj != li)
                                psi += ch.cross[b][li][lj];
                    const double gamma = (sdma ? share[b][li] : 1.0) * ch.signal_mw[u] / denom;
                    for (std::size_t r = 0; r < nr; ++r)
                        out[r].tti_sinr[k][static_cast<std::size_t>(t)] =
                            sdma ? sinr_sdma_quantized({gamma, g_rx, psi}, alphas[r])
                                 : sinr_orthogonal_quantized(gamma, alphas[r], g_rx);
                }
        }
        interference = cur_interf;
    }

    const double duration = cfg.n_ttis * cfg.tti_s;
    for (std::size_t r = 0; r < nr; ++r) {
        out[r].beam_usage = beam_usage;
        for (std::size_t u : reported) {
            UeResult res;
            res.ue = u;
            res.serving_bs = drop.association[u];
            res.n_bits = resolutions[r];
            res.scheduled_ttis = sched_count[u];
            if (sched_count[u] > 0)
                res.sinr_db = linear_to_db(sinr_sum[r][u] / sched_count[u]);
            res.rate_bps = bits[r][u] / duration;
            out[r].ues.push_back(res);
        }
    }
    return out;
}

inline DropResult run_drop(const NetworkConfig &cfg, std::uint64_t seed)
{
    const NetworkDrop drop = generate_layout(cfg, seed);
    return run_drop_multi(cfg, drop, {cfg.n_adc_bits}).front();
}

// Seed of drop i under master seed s.
inline std::uint64_t drop_seed(std::uint64_t master, std::size_t drop_index)
{
    return substream_seed(master, 1000 + drop_index);
}

// Runs n_drops independent drops on `jobs` workers. Result [drop][resolution].
inline std::vector<std::vector<DropResult>> run_drops(const NetworkConfig &cfg, std::size_t n_drops,
                                                      const std::vector<Resolution> &resolutions, unsigned jobs,
                                                      const DropOptions &opt = {})
{
    return parallel_map<std::vector<DropResult>>(n_drops, jobs, [&](std::size_t d) {
        const NetworkDrop drop = generate_layout(cfg, drop_seed(cfg.seed, d));
        return run_drop_multi(cfg, drop, resolutions, opt);
    });
}

} // namespace lowres
