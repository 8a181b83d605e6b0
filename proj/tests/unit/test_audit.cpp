#include <gtest/gtest.h>

#include "audit_fixtures.hpp"
#include "geofuse/audit.hpp"

using namespace geofuse;

namespace {

bool passes(const ConstraintReport& r, int id) {
    const ConstraintResult* c = r.find(id);
    return c && c->pass && *c->pass;
}

}  // namespace

TEST(Audit, FeasibleFixturePassesEverything) {
    const ConstraintReport r = audit(fixtures::feasible_record(), fixtures::fixture_config());
    ASSERT_TRUE(r.feasible);
    EXPECT_TRUE(*r.feasible);
    EXPECT_TRUE(r.failed().empty());
    EXPECT_EQ(r.results.size(), 16u);
    EXPECT_EQ(r.results.front().id, 1);
}

class SingleViolation : public ::testing::TestWithParam<int> {};

TEST_P(SingleViolation, FlagsExactlyThatConstraint) {
    const int id = GetParam();
    const ConstraintReport r = audit(fixtures::violating_record(id), fixtures::fixture_config());
    ASSERT_TRUE(r.feasible);
    EXPECT_FALSE(*r.feasible);
    EXPECT_EQ(r.failed(), std::vector<int>{id});
}

INSTANTIATE_TEST_SUITE_P(Constraints, SingleViolation, ::testing::Range(2, 17));

TEST(Audit, ThreeViolations) {
    RunRecord rec = fixtures::feasible_record();
    rec.true_positives = fixtures::violating_record(4).true_positives;
    rec.class_means = fixtures::violating_record(9).class_means;
    rec.fitness_trace = fixtures::violating_record(16).fitness_trace;
    EXPECT_EQ(audit(rec, fixtures::fixture_config()).failed(), (std::vector<int>{4, 9, 16}));
}

TEST(Audit, AccuracyThreshold) {
    AuditConfig cfg = fixtures::fixture_config();
    RunRecord rec = fixtures::feasible_record();
    rec.true_positives = 92.0;
    EXPECT_TRUE(passes(audit(rec, cfg), 4));
    rec.true_positives = 85.0;
    EXPECT_FALSE(passes(audit(rec, cfg), 4));
}

TEST(Audit, ZeroGapPassesOverfitCheck) {
    RunRecord rec = fixtures::feasible_record();
    AuditConfig cfg = fixtures::fixture_config();
    rec.train_accuracy = rec.test_accuracy = 0.7;
    cfg.overfit_tolerance = 0.0;
    EXPECT_TRUE(passes(audit(rec, cfg), 11));
}

TEST(Audit, ZeroGammaGivesPlainCap) {
    const ConstraintReport r = audit(fixtures::feasible_record(), fixtures::fixture_config());
    EXPECT_EQ(*r.find(12)->threshold, 100.0);
}

TEST(Audit, MissingInputWithholdsVerdict) {
    RunRecord rec = fixtures::feasible_record();
    rec.boundary_gradient_norm.reset();
    const ConstraintReport r = audit(rec, fixtures::fixture_config());
    EXPECT_FALSE(r.feasible);
    EXPECT_FALSE(r.find(8)->pass);
    EXPECT_NE(r.diagnostic.find('8'), std::string::npos);
    AuditConfig cfg = fixtures::fixture_config();
    cfg.r_min.reset();
    EXPECT_FALSE(audit(fixtures::feasible_record(), cfg).feasible);
}

TEST(Audit, IdenticalClassMeansFail) {
    RunRecord rec = fixtures::feasible_record();
    (*rec.class_means)[1] = (*rec.class_means)[0];
    EXPECT_FALSE(passes(audit(rec, fixtures::fixture_config()), 9));
}

TEST(Audit, DeterministicAndPure) {
    const auto rec = fixtures::violating_record(7);
    EXPECT_EQ(report_csv(audit(rec, fixtures::fixture_config())), report_csv(audit(rec, fixtures::fixture_config())));
}

TEST(Audit, ThresholdMonotonicity) {
    const RunRecord rec = fixtures::feasible_record();
    AuditConfig cfg = fixtures::fixture_config();
    bool was_failing = false;
    for (double a = 0.5; a <= 1.0; a += 0.01) {
        cfg.a_min = a;
        const bool pass = passes(audit(rec, cfg), 4);
        if (was_failing) EXPECT_FALSE(pass);
        was_failing = was_failing || !pass;
    }
    cfg = fixtures::fixture_config();
    bool was_passing = false;
    for (double v = 100; v < 1e5; v *= 1.5) {
        cfg.v_max = v;
        const bool pass = passes(audit(rec, cfg), 2);
        if (was_passing) EXPECT_TRUE(pass);
        was_passing = was_passing || pass;
    }
}

TEST(Audit, SimilarityIsSymmetricInClassOrder) {
    RunRecord rec = fixtures::violating_record(9);
    const auto before = audit(rec, fixtures::fixture_config()).find(9)->measured;
    std::swap((*rec.class_means)[0], (*rec.class_means)[2]);
    EXPECT_EQ(audit(rec, fixtures::fixture_config()).find(9)->measured, before);
}

TEST(Audit, DisablingOneCheckLeavesOthers) {
    const RunRecord rec = fixtures::violating_record(12);
    const ConstraintReport full = audit(rec, fixtures::fixture_config());
    for (int off = 2; off <= 16; ++off) {
        AuditConfig cfg = fixtures::fixture_config();
        cfg.enabled.erase(off);
        const ConstraintReport part = audit(rec, cfg);
        EXPECT_EQ(part.find(off), nullptr);
        for (int id = 2; id <= 16; ++id) {
            if (id == off) continue;
            EXPECT_EQ(part.find(id)->pass, full.find(id)->pass);
        }
    }
}

TEST(Audit, CsvLayout) {
    const std::string csv = report_csv(audit(fixtures::violating_record(3), fixtures::fixture_config()));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,name,measured,threshold,pass");
    EXPECT_NE(csv.find("3,dimensionality,5,4,false\n"), std::string::npos);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(3.0), "3");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
}
