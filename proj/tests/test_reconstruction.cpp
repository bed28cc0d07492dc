#include <gtest/gtest.h>

#include "support.hpp"

using namespace qrm;

namespace {

const TimePartition part = build_partition(4.0, 250);

QrmSolution coefficient_field(const SpatialGrid& g, int N, const std::function<double(int, int, int)>& fn) {
    QrmSolution s;
    s.grid = g;
    s.index = FlatIndex(g.N_x, N);
    s.U.resize(static_cast<Eigen::Index>(s.index.size()));
    for (int i = 1; i <= g.N_x + 1; ++i)
        for (int j = 1; j <= g.N_x + 1; ++j)
            for (int n = 1; n <= N; ++n) s.U[static_cast<Eigen::Index>(s.index.offset(i, j, n))] = fn(i, j, n);
    return s;
}

SpaceTimeField field_from(const SpatialGrid& g, const TimePartition& p, const std::function<double(double, double, double)>& fn) {
    SpaceTimeField f;
    f.grid = g;
    f.partition = p;
    f.values.resize(static_cast<Eigen::Index>(g.node_count()), p.sample_count());
    for (int i = 1; i <= g.N_x + 1; ++i)
        for (int j = 1; j <= g.N_x + 1; ++j)
            for (int k = 1; k <= p.sample_count(); ++k)
                f.values(static_cast<Eigen::Index>(g.node_offset(i, j)), k - 1) = fn(g.x(i), g.y(j), p.time(k));
    return f;
}

} // namespace

TEST(Synthesize, UnitCoefficientGivesBasisFunction) {
    const auto g = build_grid(1.0, 4);
    const auto basis = build_basis(5, part);
    const auto sol = coefficient_field(g, 5, [](int, int, int n) { return n == 3 ? 1.0 : 0.0; });
    for (double t : {0.0, 1.7, 4.0}) {
        const auto f = synthesize(sol, basis, t);
        for (double v : f.values) EXPECT_NEAR(v, basis.value(3, t), 1e-14);
    }
}

TEST(Synthesize, ZeroAndLinearity) {
    const auto g = build_grid(1.0, 4);
    const auto basis = build_basis(4, part);
    const auto zero = synthesize(coefficient_field(g, 4, [](int, int, int) { return 0.0; }), basis, 0.5);
    for (double v : zero.values) EXPECT_EQ(v, 0.0);
    const auto a = coefficient_field(g, 4, [](int i, int j, int n) { return std::sin(i + 2.0 * j + n); });
    const auto b = coefficient_field(g, 4, [](int i, int j, int n) { return std::cos(i * j * 1.0 - n); });
    auto mix = a;
    mix.U = 3.0 * a.U - 0.5 * b.U;
    const auto fa = synthesize(a, basis, 0.0), fb = synthesize(b, basis, 0.0), fm = synthesize(mix, basis, 0.0);
    for (std::size_t p = 0; p < fm.values.size(); ++p)
        EXPECT_NEAR(fm.values[p], 3.0 * fa.values[p] - 0.5 * fb.values[p], 1e-12);
    EXPECT_THROW(synthesize(a, basis, -0.1), Error);
    EXPECT_THROW(synthesize(a, build_basis(3, part), 0.0), Error);
}

TEST(Synthesize, ProjectedForwardSolutionApproximatesSource) {
    const auto g = build_grid(2.0, 20);
    const auto basis = build_basis(30, part);
    const auto ext = extended_grid(g, 2.0);
    const auto fwd = solve_forward(ext, GridField::sample(ext, peaks_coefficient), GridField::sample(ext, bump_source()),
                                   part, g);
    const Eigen::MatrixXd coeff = fwd.field.values * basis.weights().asDiagonal() * basis.samples().transpose();
    const auto sol = coefficient_field(g, 30, [&](int i, int j, int n) {
        return coeff(static_cast<Eigen::Index>(g.node_offset(i, j)), n - 1);
    });
    const auto f = reconstruct(sol, basis).f_comp;
    const auto truth = sample_source(bump_source(), g);
    const auto trunc = truncation_error(fwd.field, basis);
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t p = 0; p < f.values.size(); ++p) {
        diff2 += std::pow(f.values[p] - truth.values[p], 2);
        ref2 += truth.values[p] * truth.values[p];
    }
    EXPECT_NEAR(std::sqrt(diff2 / ref2), trunc.rel_l2, 1e-10);
    EXPECT_LT(trunc.rel_l2, 0.05);
}

TEST(Metrics, IdenticalFieldsGiveZeroError) {
    const auto g = build_grid(2.0, 40);
    const auto f = sample_source(bump_source(), g);
    const auto rows = metrics(f, f, bump_source());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].error_rel, 0.0);
    EXPECT_EQ(rows[0].dis_err, 0.0);
    EXPECT_EQ(rows[0].rel_l2, 0.0);
    EXPECT_EQ(rows[0].max_true, 1.0);
    EXPECT_EQ(rows[0].pos_true.x, 0.0);
    EXPECT_EQ(rows[0].pos_true.y, 0.0);
}

TEST(Metrics, KnownShiftAndScale) {
    const auto g = build_grid(2.0, 40);
    const auto truth = sample_source(bump_source(), g);
    const auto comp = GridField::sample(g, [](double x, double y) {
        auto s = bump_source();
        s.centers = {{0.2, -0.1}};
        return 0.9 * s(x, y);
    });
    const auto r = metrics(comp, truth, bump_source())[0];
    EXPECT_NEAR(r.max_comp, 0.9, 1e-15);
    EXPECT_NEAR(r.error_rel, 0.1, 1e-15);
    EXPECT_NEAR(r.pos_comp.x, 0.2, 1e-15);
    EXPECT_NEAR(r.pos_comp.y, -0.1, 1e-15);
    EXPECT_NEAR(r.dis_err, std::hypot(0.2, 0.1), 1e-15);
}

TEST(Metrics, ScaleInvariance) {
    const auto g = build_grid(2.0, 20);
    const auto truth = sample_source(bump_source(), g);
    const auto comp = GridField::sample(g, [](double x, double y) { return std::exp(-(x - 0.3) * (x - 0.3) - y * y); });
    const auto base = metrics(comp, truth, bump_source())[0];
    for (double alpha : {0.01, 3.0, 250.0}) {
        auto c = comp, t = truth;
        for (auto& v : c.values) v *= alpha;
        for (auto& v : t.values) v *= alpha;
        const auto r = metrics(c, t, bump_source())[0];
        EXPECT_NEAR(r.error_rel, base.error_rel, 1e-14);
        EXPECT_EQ(r.dis_err, base.dis_err);
    }
}

TEST(Metrics, TiesBreakLexicographically) {
    const auto g = build_grid(1.0, 10);
    GridField truth(g), comp(g);
    truth(6, 6) = 1.0;
    comp(8, 3) = 2.0;
    comp(4, 9) = 2.0;
    comp(4, 7) = 2.0;
    const auto r = metrics(comp, truth, bump_source())[0];
    EXPECT_EQ(r.pos_comp.x, g.x(4));
    EXPECT_EQ(r.pos_comp.y, g.y(7));
}

TEST(Metrics, TwoBumpsSplitAtZero) {
    const auto g = build_grid(2.0, 40);
    const auto truth = sample_source(two_bumps_source(), g);
    auto comp = truth;
    for (int i = 1; i <= 41; ++i)
        for (int j = 1; j <= 41; ++j) comp(i, j) *= g.x(i) < 0 ? 0.96 : 0.98;
    const auto rows = metrics(comp, truth, two_bumps_source());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].region, "left");
    EXPECT_EQ(rows[1].region, "right");
    EXPECT_NEAR(rows[0].error_rel, 0.04, 1e-14);
    EXPECT_NEAR(rows[1].error_rel, 0.02, 1e-14);
    EXPECT_EQ(rows[0].pos_true.x, -1.0);
    EXPECT_EQ(rows[1].pos_true.x, 1.0);
    EXPECT_EQ(rows[0].dis_err, 0.0);
}

TEST(Metrics, RejectsVanishingTruth) {
    const auto g = build_grid(1.0, 6);
    EXPECT_THROW(metrics(GridField(g), GridField(g), bump_source()), Error);
    EXPECT_THROW(metrics(GridField(g), GridField(build_grid(1.0, 8)), bump_source()), Error);
}

TEST(Metrics, CsvLayout) {
    MetricsRow r;
    r.noise_level = 0.5;
    r.max_true = 1.0;
    r.max_comp = 0.79;
    const std::string path = ::testing::TempDir() + "metrics.csv";
    write_metrics_csv({r}, path);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "noise_level,max_true,max_comp,error_rel,pos_true_x,pos_true_y,pos_comp_x,pos_comp_y,dis_err,rel_l2");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 11), "0.5,1,0.790");
}

TEST(Truncation, FieldInTheSpanIsReproduced) {
    const auto g = build_grid(1.0, 4);
    const auto p = build_partition(4.0, 40);
    const auto basis = build_basis(8, p);
    const auto field = field_from(g, p, [&](double x, double y, double t) {
        return (1.0 + x * y) * basis.value(2, t) + x * basis.value(7, t);
    });
    EXPECT_LE(truncation_error(field, basis).rel_l2, 1e-10);
}

TEST(Truncation, ConstantFieldErrorIsTheProjectionTail) {
    const auto g = build_grid(1.0, 2);
    const auto field = field_from(g, part, [](double, double, double) { return 1.0; });
    double prev = 1e300;
    for (int N : {2, 5, 10, 20}) {
        const auto basis = build_basis(N, part);
        // Projection coefficients of 1 summed directly, then the partial sum at t = 0.
        double partial = 0.0;
        for (int n = 1; n <= N; ++n) {
            double coeff = 0.0;
            for (int k = 0; k < part.sample_count(); ++k) coeff += basis.weights()[k] * basis.samples()(n - 1, k);
            partial += coeff * basis.value(n, 0.0);
        }
        const double tail = std::abs(partial - 1.0);
        const auto row = truncation_error(field, basis);
        EXPECT_NEAR(row.rel_l2, tail, 1e-12);
        EXPECT_LT(row.rel_l2, prev);
        prev = row.rel_l2;
    }
}

TEST(Truncation, ReportOverOrders) {
    const auto g = build_grid(2.0, 20);
    const auto ext = extended_grid(g, 2.0);
    const auto fwd = solve_forward(ext, GridField::sample(ext, peaks_coefficient),
                                   GridField::sample(ext, letter_lambda_source()), part, g);
    const auto rows = truncation_report(fwd.field, {10, 20, 30});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_GT(rows[0].rel_l2, rows[1].rel_l2);
    EXPECT_GT(rows[1].rel_l2, rows[2].rel_l2);
    EXPECT_THROW(truncation_error(fwd.field, build_basis(5, build_partition(4.0, 100))), Error);
}
