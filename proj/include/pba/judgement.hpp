#pragma once

#include "pba/emulator.hpp"

#include <string>

namespace pba {

enum class DiscrepancyTier { Standard, Medium, High };

enum class BasisChoice { Stepwise10, Stepwise5, LinearAll, Constant };

enum class FamilyChoice { PowerExp2, PowerExp19, PowerExp15, Matern32, Matern52 };

// One complete prior + likelihood configuration: everything that
// distinguishes alternative Bayesian analyses of the same data.
struct JudgementSet {
    std::string id;
    BasisChoice basis = BasisChoice::Stepwise10;
    FamilyChoice family = FamilyChoice::PowerExp19;
    double kappaPriorScale = 1.0;  // multiplier on (a_kappa, b_kappa); in [0.5, 5]
    double nuPriorScale = 1.0;     // multiplier on (a_nu, b_nu); in (0, 4]
    DiscrepancyTier tier = DiscrepancyTier::Standard;

    void validate() const;

    BasisPolicy basis_policy() const;
    CorrelationFamily correlation_family() const;
    double correlation_power() const;

    static JudgementSet default_j0();
};

std::string to_string(BasisChoice c);
std::string to_string(FamilyChoice c);
std::string to_string(DiscrepancyTier t);
BasisChoice basis_choice_from_string(const std::string& s);
FamilyChoice family_choice_from_string(const std::string& s);
DiscrepancyTier tier_from_string(const std::string& s);

}  // namespace pba
