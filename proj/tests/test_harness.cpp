#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrm/harness.hpp"

using namespace qrm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.N_x = 16;
    cfg.N_T = 40;
    cfg.N = 6;
    cfg.extension = 2.0;
    cfg.out = (std::filesystem::path(::testing::TempDir()) / name).string();
    std::filesystem::remove_all(cfg.out);
    return cfg;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

} // namespace

TEST(Config, DefaultsAreReferenceValues) {
    const ExperimentConfig cfg;
    EXPECT_EQ(cfg.R, 2.0);
    EXPECT_EQ(cfg.N_x, 80);
    EXPECT_EQ(cfg.T, 4.0);
    EXPECT_EQ(cfg.N_T, 250);
    EXPECT_EQ(cfg.N, 30);
    EXPECT_EQ(cfg.epsilon, 1e-7);
}

TEST(Config, FileThenOverrides) {
    const std::string path = ::testing::TempDir() + "cfg.txt";
    {
        std::ofstream os(path);
        os << "# comment\n\ntest = 2\nnx=40\nepsilon=1e-6\ndeltas=0, 0.25 ,0.5\nsolver=iterative\n";
    }
    ExperimentConfig cfg;
    load_config(cfg, path);
    EXPECT_EQ(cfg.test, 2);
    EXPECT_EQ(cfg.N_x, 40);
    EXPECT_EQ(cfg.epsilon, 1e-6);
    EXPECT_EQ(cfg.deltas, (std::vector<double>{0.0, 0.25, 0.5}));
    EXPECT_EQ(cfg.solver, SolverKind::iterative);
    cfg.set("nx", "20");
    EXPECT_EQ(cfg.N_x, 20);
}

TEST(Config, RejectsBadInput) {
    ExperimentConfig cfg;
    EXPECT_THROW(cfg.set("colour", "red"), Error);
    EXPECT_THROW(cfg.set("nx", "80x"), Error);
    EXPECT_THROW(cfg.set("test", "5"), Error);
    EXPECT_THROW(cfg.set("solver", "magic"), Error);
    EXPECT_THROW(cfg.set("inverse_crime", "maybe"), Error);
    EXPECT_THROW(load_config(cfg, "/nonexistent/qrm.cfg"), Error);
}

TEST(Config, EntriesRoundTrip) {
    ExperimentConfig a;
    a.test = 3;
    a.epsilon = 3.3e-8;
    a.deltas = {0.1, 0.15};
    a.deltas_set = true;
    a.seed = 99;
    a.inverse_crime = true;
    ExperimentConfig b;
    for (const auto& [k, v] : a.entries()) b.set(k, v);
    EXPECT_EQ(a.entries(), b.entries());
}

TEST(Harness, EmptyNoiseListRejected) {
    auto cfg = small_config("empty");
    cfg.set("deltas", "");
    try {
        run(cfg);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "harness: no noise levels requested");
    }
}

TEST(Harness, TwoNoiseLevelsGiveTwoRowsTwoDumpsOneManifest) {
    auto cfg = small_config("two_levels");
    cfg.set("deltas", "0,0.25");
    const auto results = run(cfg);
    ASSERT_EQ(results.size(), 2u);
    const auto metrics = slurp(cfg.out + "/metrics.csv");
    EXPECT_EQ(count_lines(metrics), 3);
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
              "noise_level,max_true,max_comp,error_rel,pos_true_x,pos_true_y,pos_comp_x,pos_comp_y,dis_err,rel_l2");
    EXPECT_TRUE(std::filesystem::exists(cfg.out + "/f_comp_delta0.csv"));
    EXPECT_TRUE(std::filesystem::exists(cfg.out + "/f_comp_delta0.25.csv"));
    EXPECT_TRUE(std::filesystem::exists(cfg.out + "/f_true.csv"));
    const auto manifest = slurp(cfg.out + "/manifest.txt");
    EXPECT_NE(manifest.find("result.status=complete"), std::string::npos);
    EXPECT_NE(manifest.find("result.case2.data_checksum=" + results[1].checksum), std::string::npos);
    EXPECT_NE(results[0].checksum, results[1].checksum);
    // The factorization is shared between the noise levels.
    EXPECT_TRUE(results[1].report.reused_factorization);
}

TEST(Harness, TwoBumpTestWritesTwoRowsPerLevel) {
    auto cfg = small_config("two_bumps");
    cfg.test = 2;
    cfg.N_x = 20;
    const auto results = run(cfg);
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(results[0].rows.size(), 2u);
    EXPECT_EQ(count_lines(slurp(cfg.out + "/metrics.csv")), 3);
}

TEST(Harness, RepeatedRunsAreByteIdentical) {
    auto a = small_config("repeat_a"), b = small_config("repeat_b");
    a.set("deltas", "0.5");
    a.seed = 7;
    b.set("deltas", "0.5");
    b.seed = 7;
    run(a);
    run(b);
    EXPECT_EQ(slurp(a.out + "/metrics.csv"), slurp(b.out + "/metrics.csv"));
    EXPECT_EQ(slurp(a.out + "/f_comp_delta0.5.csv"), slurp(b.out + "/f_comp_delta0.5.csv"));
}

TEST(Harness, ManifestReproducesTheRun) {
    auto cfg = small_config("from_manifest");
    cfg.set("deltas", "0.25");
    cfg.seed = 3;
    run(cfg);
    const std::string first = slurp(cfg.out + "/metrics.csv");
    ExperimentConfig again;
    load_config(again, cfg.out + "/manifest.txt");
    again.out = cfg.out + "_rerun";
    run(again);
    EXPECT_EQ(slurp(again.out + "/metrics.csv"), first);
}

TEST(Harness, SweepUsesDefaultNoiseLevels) {
    auto cfg = small_config("sweep");
    const auto results = sweep(cfg);
    ASSERT_EQ(results.size(), 5u);
    EXPECT_EQ(results[4].delta, 1.0);
    EXPECT_EQ(count_lines(slurp(cfg.out + "/metrics.csv")), 6);
}

TEST(Harness, FailureIsRecordedInManifest) {
    auto cfg = small_config("failure");
    cfg.R = 1.0;  // bump support reaches the measurement boundary
    EXPECT_THROW(run(cfg), Error);
    const auto manifest = slurp(cfg.out + "/manifest.txt");
    EXPECT_NE(manifest.find("result.status=failed"), std::string::npos);
    EXPECT_NE(manifest.find("result.failed_stage=sources"), std::string::npos);
    EXPECT_NE(manifest.find("result.partial_artifacts=true"), std::string::npos);
}

TEST(Harness, InverseCrimeUsesTheInversionGrid) {
    auto cfg = small_config("crime");
    cfg.inverse_crime = true;
    Experiment ex(cfg);
    EXPECT_EQ(ex.forward_grid(), ex.grid());
    // Homogeneous Dirichlet on the measurement boundary itself.
    EXPECT_EQ(ex.clean_data().F.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Harness, IntermediateDumps) {
    auto cfg = small_config("dumps");
    cfg.dump_intermediate = true;
    run(cfg);
    for (const char* name : {"basis.csv", "qrm_matrix.mtx", "cauchy_delta0.csv", "projection_delta0.csv"})
        EXPECT_TRUE(std::filesystem::exists(cfg.out + "/" + name)) << name;
}

TEST(Harness, TruncationReport) {
    auto cfg = small_config("trunc");
    cfg.test = 4;
    cfg.N_T = 100;
    cfg.truncation_orders = {5, 10, 20};
    const auto rows = truncation(cfg);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_GT(rows[0].rel_l2, rows[2].rel_l2);
    EXPECT_EQ(count_lines(slurp(cfg.out + "/truncation.csv")), 4);
    EXPECT_TRUE(std::filesystem::exists(cfg.out + "/truncation_error_N20.csv"));
}
