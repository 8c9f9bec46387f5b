// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include "lowres/network_sim.hpp"

#include <numeric>

using namespace lowres;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXcd random_psd(int n, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 0);
    ComplexGaussian g;
    Eigen::MatrixXcd a(n, n / 2);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            a(i, j) = g(rng);
    return a * a.adjoint();
}

// Independent oracle: power iteration from a fixed start.
double power_iteration(const Eigen::MatrixXcd &q)
{
    Eigen::VectorXcd x = Eigen::VectorXcd::Ones(q.rows());
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        Eigen::VectorXcd y = q * x;
        lambda = y.norm();
        x = y / lambda;
    }
    return lambda;
}

NetworkConfig short_run()
{
    NetworkConfig cfg;
    cfg.n_ttis = 40;
    return cfg;
}

} // namespace

TEST_CASE("hexagonal layout")
{
    NetworkConfig cfg;
    std::vector<Vec2> sites;
    std::vector<bool> interior;
    hex_sites(cfg.area_m, cfg.cell_radius_m, sites, interior);
    CHECK(sites.size() >= 30);
    CHECK(sites.size() <= 45);
    const auto n_interior = std::count(interior.begin(), interior.end(), true);
    CHECK(n_interior > 5);
    CHECK(n_interior < static_cast<long>(sites.size()));
    for (const auto &s : sites) {
        CHECK(s.x >= 0.0);
        CHECK(s.x <= cfg.area_m);
        CHECK(s.y <= cfg.area_m);
    }
    CHECK(inside_hexagon(0.0, 99.9, 100.0));
    CHECK_FALSE(inside_hexagon(0.0, 100.1, 100.0));
    CHECK(inside_hexagon(86.0, 0.0, 100.0));
    CHECK_FALSE(inside_hexagon(87.0, 0.0, 100.0));
}

TEST_CASE("UE placement")
{
    NetworkConfig cfg;
    SECTION("mean UEs per cell over 1000 drops")
    {
        double total = 0.0, cells = 0.0;
        for (std::uint64_t s = 0; s < 1000; ++s) {
            const auto d = place_nodes(cfg, s);
            total += static_cast<double>(d.n_ue());
            cells += static_cast<double>(d.n_bs());
        }
        CHECK_THAT(total / cells, WithinRel(10.0, 0.02));
    }
    SECTION("UEs lie in their hexagon outside the minimum distance")
    {
        const auto d = place_nodes(cfg, 3);
        for (std::size_t u = 0; u < d.n_ue(); ++u) {
            const auto &bs = d.bs_positions[static_cast<std::size_t>(d.ue_cell[u])];
            const double dx = d.ue_positions[u].x - bs.x, dy = d.ue_positions[u].y - bs.y;
            CHECK(inside_hexagon(dx, dy, cfg.cell_radius_m));
            CHECK(std::hypot(dx, dy) >= cfg.min_ue_distance_m);
        }
    }
    SECTION("fixed mode places exactly the mean")
    {
        cfg.ue_drop_mode = UeDropMode::Fixed;
        const auto d = place_nodes(cfg, 4);
        CHECK(d.n_ue() == 10 * d.n_bs());
    }
}

TEST_CASE("layout is deterministic for a seed")
{
    NetworkConfig cfg;
    const auto a = generate_layout(cfg, 42);
    const auto b = generate_layout(cfg, 42);
    REQUIRE(a.n_ue() == b.n_ue());
    for (std::size_t u = 0; u < a.n_ue(); ++u) {
        CHECK(a.ue_positions[u].x == b.ue_positions[u].x);
        CHECK(a.association[u] == b.association[u]);
        CHECK(a.pathloss_db[u] == b.pathloss_db[u]);
        if (a.association[u] >= 0)
            CHECK(a.cov_tx[u] == b.cov_tx[u]);
    }
    const auto c = generate_layout(cfg, 43);
    CHECK((c.n_ue() != a.n_ue() || c.ue_positions[0].x != a.ue_positions[0].x));

    for (std::size_t u = 0; u < a.n_ue(); ++u) {
        if (a.association[u] < 0)
            continue;
        const auto &row = a.pathloss_db[u];
        CHECK(row[static_cast<std::size_t>(a.association[u])] == *std::min_element(row.begin(), row.end()));
    }
}

TEST_CASE("pathloss model")
{
    const PathlossParams p;
    CHECK_THAT(pathloss_db(100.0, LinkState::NLOS, p, 0.0), WithinAbs(130.4, 0.05));
    CHECK_THAT(pathloss_db(100.0, LinkState::LOS, p, 0.0), WithinAbs(101.4, 0.05));
    CHECK_THAT(pathloss_db(100.0, LinkState::NLOS, p, 1.0), WithinAbs(130.4 + 8.7, 0.05));
    CHECK(std::isinf(pathloss_db(100.0, LinkState::Outage, p, 0.0)));
    CHECK_THROWS_AS(pathloss_db(0.0, LinkState::LOS, p, 0.0), InvalidArgument);
    CHECK_THROWS_AS(pathloss_db(-5.0, LinkState::NLOS, p, 0.0), InvalidArgument);
    // Shadowing never brings the loss below free space.
    CHECK(pathloss_db(50.0, LinkState::LOS, p, -3.0) >= free_space_pathloss_db(50.0, 28e9));

    for (auto st : {LinkState::LOS, LinkState::NLOS}) {
        Rng r1 = make_rng(1, 0), r2 = make_rng(1, 0);
        double near = 0.0, far = 0.0;
        for (int i = 0; i < 20000; ++i) {
            near += pathloss_db(80.0, st, p, r1);
            far += pathloss_db(160.0, st, p, r2);
        }
        CHECK(far > near);
    }

    for (double d : {10.0, 50.0, 100.0, 200.0, 400.0}) {
        const double po = outage_probability(d, p), pl = los_probability(d, p);
        CHECK(po >= 0.0);
        CHECK(po + pl <= 1.0);
    }
    CHECK(outage_probability(10.0, p) == 0.0);
    CHECK(outage_probability(400.0, p) > 0.9);
}

TEST_CASE("array steering")
{
    const UniformPlanarArray arr;
    const auto a = arr.steering(0.0, 0.0);
    CHECK(a.size() == 64);
    for (int i = 0; i < a.size(); ++i)
        CHECK(std::abs(a(i) - cplx(1.0, 0.0)) < 1e-15);
    const auto b = arr.steering(0.4, -0.2);
    for (int i = 0; i < b.size(); ++i)
        CHECK_THAT(std::abs(b(i)), WithinAbs(1.0, 1e-12));
}

TEST_CASE("covariances")
{
    const UniformPlanarArray bs, ue{4, 4, 0.5};
    const LinkGeometry g = link_geometry({0.0, 0.0}, {60.0, 30.0}, 10.0, 1.5, true);
    SECTION("random draws are Hermitian PSD with trace N")
    {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng rng = make_rng(s, 0);
            const auto c = generate_covariances(g, bs, ue, ClusterParams{}, rng);
            CHECK((c.tx - c.tx.adjoint()).norm() < 1e-10);
            CHECK_THAT(c.tx.trace().real(), WithinAbs(64.0, 1e-9));
            CHECK_THAT(c.rx.trace().real(), WithinAbs(16.0, 1e-9));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c.tx);
            CHECK(es.eigenvalues().minCoeff() > -1e-10);
            double total = 0.0;
            for (const auto &r : c.rays)
                total += r.power;
            CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        }
    }
    SECTION("a single ray gives a rank-one covariance and full array gain")
    {
        ClusterParams cp;
        cp.mean_extra_clusters = 0.0;
        cp.rays_per_cluster = 1;
        Rng rng = make_rng(9, 0);
        const auto c = generate_covariances(g, bs, ue, cp, rng);
        REQUIRE(c.rays.size() == 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c.tx);
        CHECK_THAT(es.eigenvalues()(63), WithinAbs(64.0, 1e-9));
        CHECK(es.eigenvalues()(62) < 1e-9);
        const auto beams = longterm_beams(c.tx, c.rx);
        CHECK_THAT(beams.g_tx, WithinAbs(64.0, 1e-9));
        CHECK_THAT(linear_to_db(beams.g_tx), WithinAbs(18.06, 0.01));
        CHECK_THAT(beams.g_rx, WithinAbs(16.0, 1e-9));
        // The LOS ray points along the geometric direction.
        CHECK_THAT(c.rays[0].az_tx, WithinAbs(g.az_tx, 1e-12));
    }
    SECTION("ray gain equals the quadratic form")
    {
        Rng rng = make_rng(10, 0);
        const auto c = generate_covariances(g, bs, ue, ClusterParams{}, rng);
        const auto beams = longterm_beams(c.tx, c.rx);
        CHECK_THAT(ray_gain(c.rays, bs, true, beams.v), WithinRel(beams.g_tx, 1e-10));
        CHECK_THAT(ray_gain(c.rays, ue, false, beams.u), WithinRel(beams.g_rx, 1e-10));
    }
}

TEST_CASE("long-term beams")
{
    SECTION("identity picks the first basis vector")
    {
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(8, 8);
        const auto b = longterm_beams(id, id);
        CHECK_THAT(b.g_rx, WithinAbs(1.0, 1e-12));
        CHECK(std::abs(b.u(0) - cplx(1.0, 0.0)) < 1e-12);
        CHECK_THAT(b.u.norm(), WithinAbs(1.0, 1e-12));
    }
    SECTION("rank one recovers the steering direction")
    {
        const UniformPlanarArray arr{4, 4, 0.5};
        const Eigen::VectorXcd a = arr.steering(0.3, 0.1) / 4.0;
        const Eigen::MatrixXcd q = 16.0 * a * a.adjoint();
        const auto b = longterm_beams(q, q);
        CHECK_THAT(std::abs(b.u.dot(a)), WithinAbs(1.0, 1e-9));
        CHECK_THAT(b.g_rx, WithinAbs(16.0, 1e-9));
    }
    SECTION("random PSD matches power iteration")
    {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto q = random_psd(16, s);
            double lambda = 0.0;
            const auto v = dominant_eigenvector(q, &lambda);
            CHECK_THAT(quadratic_form(q, v), WithinRel(lambda, 1e-9));
            CHECK_THAT(lambda, WithinRel(power_iteration(q), 1e-9));
            CHECK(dominant_eigenvector(q) == v);
        }
    }
    SECTION("zero matrix")
    {
        const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(4, 4);
        CHECK_THROWS_AS(longterm_beams(z, z), DegenerateInput);
    }
}

TEST_CASE("rate mapping")
{
    const NetworkConfig cfg;
    CHECK_THAT(rate_from_sinr(1e30, 1e9, cfg), WithinRel(5.925e9, 1e-4));
    CHECK(rate_from_sinr(0.0, 1e9, cfg) == 0.0);
    CHECK_THAT(rate_from_sinr(std::pow(10.0, 0.3), 2e8, cfg), WithinRel(0.8 * 2e8, 1e-12));
    CHECK_THROWS_AS(rate_from_sinr(-1.0, 1e9, cfg), InvalidArgument);
}

TEST_CASE("proportional fair bandwidth split")
{
    SchedulerState st(4, 1.0);
    CHECK(schedule_ofdma_pf(st, {}, {}, 1e9).empty());
    const auto one = schedule_ofdma_pf(st, {2}, {3.0}, 1e9);
    CHECK(one[0] == 1e9);
    const auto two = schedule_ofdma_pf(st, {0, 1}, {3.0, 3.0}, 1e9);
    CHECK(two[0] == 5e8);
    CHECK(two[1] == 5e8);

    SECTION("long-run fairness over 10^4 TTIs")
    {
        SchedulerState s(3, 1.0);
        const std::vector<std::size_t> ues = {0, 1, 2};
        const std::vector<double> se = {4.0, 4.0, 4.0};
        std::vector<double> acc(3, 0.0);
        // Unequal start so that the fixed point has to be reached.
        s.add_bits(0, 5e6);
        for (int t = 0; t < 10000; ++t) {
            const auto w = schedule_ofdma_pf(s, ues, se, 1e9);
            CHECK_THAT(std::accumulate(w.begin(), w.end(), 0.0), WithinRel(1e9, 1e-12));
            for (std::size_t i = 0; i < 3; ++i) {
                acc[i] += w[i];
                s.add_bits(i, w[i] * se[i] * 125e-6);
            }
        }
        for (std::size_t i = 0; i < 3; ++i)
            CHECK_THAT(acc[i] / 1e4, WithinRel(1e9 / 3.0, 0.02));
    }
    CHECK_THROWS_AS(schedule_ofdma_pf(st, {0, 1}, {1.0}, 1e9), InvalidArgument);
    CHECK_THROWS_AS(st.add_bits(0, -1.0), InvalidArgument);
}

TEST_CASE("greedy SDMA grouping")
{
    const NetworkConfig cfg;
    SchedulerState st(3, 1.0);
    SdmaCandidates c;
    c.gamma_full = {100.0, 80.0, 60.0};
    c.g_rx = {16.0, 16.0, 16.0};
    c.alpha = alpha_of(4);
    SECTION("orthogonal users are all admitted")
    {
        c.cross = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
        const auto g = schedule_sdma_greedy(st, {0, 1, 2}, c, 2, cfg);
        CHECK(g.size() == 2);
        CHECK(g[0] == 0);
        CHECK(schedule_sdma_greedy(st, {0, 1, 2}, c, 4, cfg).size() == 3);
    }
    SECTION("one beam reduces to PF selection")
    {
        c.cross = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
        st.add_bits(0, 1e6);
        const auto g = schedule_sdma_greedy(st, {0, 1, 2}, c, 1, cfg);
        REQUIRE(g.size() == 1);
        CHECK(g[0] == 1);
    }
    SECTION("strong mutual interference keeps a single user")
    {
        c.cross = {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
        CHECK(schedule_sdma_greedy(st, {0, 1, 2}, c, 4, cfg).size() == 1);
    }
    SECTION("each admission raises the modelled sum rate")
    {
        c.cross = {{1.0, 0.05, 0.3}, {0.02, 1.0, 0.1}, {0.2, 0.1, 1.0}};
        const auto g = schedule_sdma_greedy(st, {0, 1, 2}, c, 3, cfg);
        std::vector<std::size_t> prefix;
        double prev = 0.0;
        for (std::size_t m : g) {
            prefix.push_back(m);
            const double s = sdma_sum_se(c, prefix, cfg);
            CHECK(s > prev);
            prev = s;
        }
    }
}

TEST_CASE("drop simulation")
{
    auto cfg = short_run();
    const auto drop = generate_layout(cfg, 7);
    const std::vector<Resolution> res = {Resolution::bits(2), Resolution::bits(3), Resolution::bits(4),
                                         Resolution::infinite()};
    DropOptions opt;
    opt.record_tti_sinr = true;

    auto check_dominance = [&](const std::vector<DropResult> &out) {
        for (std::size_t r = 0; r + 1 < out.size(); ++r)
            for (std::size_t k = 0; k < out[r].tti_sinr.size(); ++k)
                for (std::size_t t = 0; t < out[r].tti_sinr[k].size(); ++t) {
                    const double lo = out[r].tti_sinr[k][t], hi = out[r + 1].tti_sinr[k][t];
                    if (std::isnan(lo) || std::isnan(hi)) {
                        CHECK(std::isnan(lo) == std::isnan(hi));
                        continue;
                    }
                    CHECK(lo <= hi * (1 + 1e-12));
                }
    };

    SECTION("OFDMA")
    {
        const auto out = run_drop_multi(cfg, drop, res, opt);
        REQUIRE(out.size() == 4);
        CHECK_FALSE(out[0].ues.empty());
        check_dominance(out);
        for (const auto &u : out[3].ues) {
            CHECK(drop.bs_interior[static_cast<std::size_t>(u.serving_bs)]);
            CHECK(u.rate_bps <= 5.925e9 * (1 + 1e-12));
        }
        CHECK(out[0].beam_usage.size() == 2);
        // Same schedule for every resolution.
        for (std::size_t i = 0; i < out[0].ues.size(); ++i)
            CHECK(out[0].ues[i].scheduled_ttis == out[3].ues[i].scheduled_ttis);
    }
    SECTION("SDMA respects the quantization cap")
    {
        cfg.scheduler = SchedulerKind::SdmaGreedy;
        cfg.n_beams_max = 4;
        const auto out = run_drop_multi(cfg, drop, res, opt);
        check_dominance(out);
        CHECK(out[0].beam_usage.size() == 5);
        const auto ch = detail::prepare_channels(cfg, drop);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t k = 0; k < out[r].ues.size(); ++k) {
                const std::size_t u = out[r].ues[k].ue;
                const double cap = sinr_saturation(alpha_of(res[r]), std::max(1.0, ch.beams[u].g_rx));
                for (double s : out[r].tti_sinr[k])
                    if (!std::isnan(s))
                        CHECK(s <= cap * (1 + 1e-12));
            }
    }
    SECTION("drops are reproducible across worker counts")
    {
        cfg.n_ttis = 10;
        const auto a = run_drops(cfg, 2, {Resolution::bits(3)}, 1);
        const auto b = run_drops(cfg, 2, {Resolution::bits(3)}, 2);
        for (std::size_t d = 0; d < 2; ++d) {
            REQUIRE(a[d][0].ues.size() == b[d][0].ues.size());
            for (std::size_t i = 0; i < a[d][0].ues.size(); ++i)
                CHECK(a[d][0].ues[i].rate_bps == b[d][0].ues[i].rate_bps);
        }
        const auto single = run_drop(cfg, drop_seed(cfg.seed, 0));
        cfg.n_adc_bits = Resolution::bits(3);
        const auto single3 = run_drop(cfg, drop_seed(cfg.seed, 0));
        REQUIRE(single3.ues.size() == a[0][0].ues.size());
        CHECK(single3.ues[0].rate_bps == a[0][0].ues[0].rate_bps);
        CHECK(single.ues.size() == single3.ues.size());
    }
    SECTION("invalid configuration")
    {
        cfg.bw_hz = -1.0;
        CHECK_THROWS_AS(generate_layout(cfg, 1), InvalidArgument);
        cfg.bw_hz = 1e9;
        CHECK_THROWS_AS(run_drop_multi(cfg, drop, {}), InvalidArgument);
    }
}
