#include "pba/judgement.hpp"

#include "pba/errors.hpp"

namespace pba {

void JudgementSet::validate() const {
    if (kappaPriorScale < 0.5 || kappaPriorScale > 5.0) {
        throw ArgumentError(
            "JudgementSet: kappaPriorScale outside the not-ruled-out range [0.5, 5]");
    }
    if (nuPriorScale <= 0.0 || nuPriorScale > 4.0) {
        throw ArgumentError("JudgementSet: nuPriorScale outside (0, 4]");
    }
}

BasisPolicy JudgementSet::basis_policy() const {
    BasisPolicy p;
    switch (basis) {
        case BasisChoice::Stepwise10:
            p.kind = BasisPolicyKind::Stepwise;
            p.dfFraction = 0.10;
            break;
        case BasisChoice::Stepwise5:
            p.kind = BasisPolicyKind::Stepwise;
            p.dfFraction = 0.05;
            break;
        case BasisChoice::LinearAll:
            p.kind = BasisPolicyKind::LinearAll;
            break;
        case BasisChoice::Constant:
            p.kind = BasisPolicyKind::Constant;
            break;
    }
    return p;
}

CorrelationFamily JudgementSet::correlation_family() const {
    switch (family) {
        case FamilyChoice::Matern32:
            return CorrelationFamily::Matern32;
        case FamilyChoice::Matern52:
            return CorrelationFamily::Matern52;
        default:
            return CorrelationFamily::PowerExponential;
    }
}

double JudgementSet::correlation_power() const {
    switch (family) {
        case FamilyChoice::PowerExp2:
            return 2.0;
        case FamilyChoice::PowerExp19:
            return 1.9;
        case FamilyChoice::PowerExp15:
            return 1.5;
        default:
            return 2.0;
    }
}

JudgementSet JudgementSet::default_j0() {
    JudgementSet j;
    j.id = "J0";
    j.basis = BasisChoice::Stepwise10;
    j.family = FamilyChoice::PowerExp19;
    j.kappaPriorScale = 1.0;
    j.nuPriorScale = 1.0;
    j.tier = DiscrepancyTier::Standard;
    return j;
}

std::string to_string(BasisChoice c) {
    switch (c) {
        case BasisChoice::Stepwise10: return "stepwise10";
        case BasisChoice::Stepwise5: return "stepwise5";
        case BasisChoice::LinearAll: return "linear";
        case BasisChoice::Constant: return "constant";
    }
    return "?";
}

std::string to_string(FamilyChoice c) {
    switch (c) {
        case FamilyChoice::PowerExp2: return "pe2";
        case FamilyChoice::PowerExp19: return "pe1.9";
        case FamilyChoice::PowerExp15: return "pe1.5";
        case FamilyChoice::Matern32: return "matern32";
        case FamilyChoice::Matern52: return "matern52";
    }
    return "?";
}

std::string to_string(DiscrepancyTier t) {
    switch (t) {
        case DiscrepancyTier::Standard: return "standard";
        case DiscrepancyTier::Medium: return "medium";
        case DiscrepancyTier::High: return "high";
    }
    return "?";
}

BasisChoice basis_choice_from_string(const std::string& s) {
    if (s == "stepwise10") return BasisChoice::Stepwise10;
    if (s == "stepwise5") return BasisChoice::Stepwise5;
    if (s == "linear") return BasisChoice::LinearAll;
    if (s == "constant") return BasisChoice::Constant;
    throw ConfigError("unknown basis choice: " + s);
}

FamilyChoice family_choice_from_string(const std::string& s) {
    if (s == "pe2") return FamilyChoice::PowerExp2;
    if (s == "pe1.9") return FamilyChoice::PowerExp19;
    if (s == "pe1.5") return FamilyChoice::PowerExp15;
    if (s == "matern32") return FamilyChoice::Matern32;
    if (s == "matern52") return FamilyChoice::Matern52;
    throw ConfigError("unknown correlation family: " + s);
}

DiscrepancyTier tier_from_string(const std::string& s) {
    if (s == "standard") return DiscrepancyTier::Standard;
    if (s == "medium") return DiscrepancyTier::Medium;
    if (s == "high") return DiscrepancyTier::High;
    throw ConfigError("unknown discrepancy tier: " + s);
}

}  // namespace pba
