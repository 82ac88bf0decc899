#include <gtest/gtest.h>

#include <set>

#include "bishop/errors.hpp"
#include "bishop/model_spec.hpp"

using namespace bishop;

TEST(ModelSpec, StandardWiring) {
  const auto spec = ModelSpec::standard();
  EXPECT_EQ(spec.shared().size(), 5u);
  EXPECT_EQ(spec.coefficients().size(), 34u);
  EXPECT_EQ(spec.families().size(), kCovariates);
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    const auto out = static_cast<Outcome>(o);
    for (auto c : {Covariate::Dilation, Covariate::Effacement, Covariate::Station,
                   Covariate::Poscon, Covariate::Treatment}) {
      EXPECT_TRUE(spec.uses(out, c));
    }
  }
  EXPECT_TRUE(spec.uses(Outcome::RomAdmit, Covariate::Gbs));
  EXPECT_TRUE(spec.uses(Outcome::RomAgent, Covariate::Gbs));
  EXPECT_TRUE(spec.uses(Outcome::AugFully, Covariate::Nullip));
  EXPECT_TRUE(spec.uses(Outcome::AugDeliv, Covariate::Epidural));
  EXPECT_TRUE(spec.uses(Outcome::AugDeliv, Covariate::Fgr));
  EXPECT_FALSE(spec.uses(Outcome::AugFully, Covariate::Fgr));
  EXPECT_TRUE(spec.uses(Outcome::Cs, Covariate::Bmi));
  EXPECT_TRUE(spec.uses(Outcome::Cs, Covariate::Ga));
  EXPECT_FALSE(spec.uses(Outcome::Cs, Covariate::Nullip));
}

TEST(ModelSpec, NamesAreUniqueAndDescriptive) {
  const auto spec = ModelSpec::standard();
  std::set<std::string> names;
  for (const auto& c : spec.coefficients()) names.insert(c.name());
  EXPECT_EQ(names.size(), spec.coefficients().size());
  EXPECT_TRUE(names.count("beta.treatment.aug_deliv"));
  EXPECT_TRUE(names.count("beta.fgr.aug_deliv"));
}

TEST(ModelSpec, FamiliesPartitionCoefficients) {
  const auto spec = ModelSpec::standard();
  std::size_t total = 0;
  for (std::size_t f = 0; f < spec.families().size(); ++f) {
    for (std::size_t ci : spec.family_members(f)) {
      EXPECT_EQ(spec.coefficients()[ci].covariate, spec.families()[f]);
      EXPECT_EQ(spec.coefficients()[ci].family, f);
    }
    total += spec.family_members(f).size();
  }
  EXPECT_EQ(total, spec.coefficients().size());
}

TEST(ModelSpec, OutcomeCoefficientsListSharedFirst) {
  const auto spec = ModelSpec::standard();
  const auto& idx = spec.outcome_coefficients(Outcome::AugDeliv);
  ASSERT_EQ(idx.size(), 8u);
  EXPECT_EQ(spec.coefficients()[idx[0]].covariate, Covariate::Dilation);
  EXPECT_EQ(spec.coefficients()[idx[5]].covariate, Covariate::Nullip);
  for (std::size_t i : idx) EXPECT_EQ(spec.coefficients()[i].outcome, Outcome::AugDeliv);
}

TEST(ModelSpec, CoefficientIndexLookup) {
  const auto spec = ModelSpec::standard();
  const auto i = spec.coefficient_index(Outcome::Cs, Covariate::Bmi);
  EXPECT_EQ(spec.coefficients()[i].name(), "beta.bmi.cs");
  EXPECT_THROW(spec.coefficient_index(Outcome::Cs, Covariate::Fgr), ValidationError);
}

TEST(ModelSpec, JsonRoundTrip) {
  const auto spec = ModelSpec::standard();
  EXPECT_EQ(ModelSpec::from_json(spec.to_json()), spec);
  EXPECT_THROW(ModelSpec::from_json("{"), ValidationError);
  EXPECT_THROW(ModelSpec::from_json("{\"shared\": [\"dilation\", \"bogus\"]}"), ValidationError);
}

TEST(ModelSpec, RejectsInconsistentWiring) {
  std::array<std::vector<Covariate>, kOutcomes> extras{};
  EXPECT_THROW(ModelSpec({Covariate::Dilation}, extras), ValidationError);
  extras[0] = {Covariate::Dilation};
  EXPECT_THROW(ModelSpec({Covariate::Dilation, Covariate::Poscon}, extras), ValidationError);
}

TEST(ModelSpec, NameLookups) {
  EXPECT_EQ(outcome_from_name("aug_fully"), Outcome::AugFully);
  EXPECT_EQ(covariate_from_name("ga"), Covariate::Ga);
  EXPECT_THROW(outcome_from_name("nope"), ValidationError);
  EXPECT_THROW(covariate_from_name("nope"), ValidationError);
}
