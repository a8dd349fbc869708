#pragma once

#include <string>
#include <variant>
#include <vector>

namespace anderson {

enum class Equation { Heat, Wave };

std::string to_string(Equation eq);
Equation parse_equation(const std::string& s);

// Temporal covariance. Either the fractional kernel
// gamma0(t) = a_H0 |t|^{2H0-2}, or a tabulated spectral density g0 on |tau|.
struct TemporalKernel {
    double h0 = 0.75;
    std::vector<double> table_tau;  // increasing, table_tau[0] == 0
    std::vector<double> table_g0;   // >= 0, linear interpolation, 0 past the end

    bool tabulated() const { return !table_tau.empty(); }
    double g0(double tau) const;
};

struct Regular {
    double alpha = 0.5;
    int dim = 1;
};

struct Rough {
    double h = 0.3;
};

struct NoiseParam {
    std::variant<Regular, Rough> regime;
    TemporalKernel temporal;

    bool is_regular() const { return std::holds_alternative<Regular>(regime); }
    bool is_rough() const { return std::holds_alternative<Rough>(regime); }
    const Regular& regular() const { return std::get<Regular>(regime); }
    const Rough& rough() const { return std::get<Rough>(regime); }
    int dim() const { return is_regular() ? regular().dim : 1; }
    // exponent of |xi| in w^2: -alpha or 1-2H
    double xi_exponent() const;
    // exponent of |tau| in g0 for the fractional kernel: 1-2H0
    double tau_exponent() const { return 1.0 - 2.0 * temporal.h0; }
};

NoiseParam make_regular(double alpha, int dim, double h0 = 0.75);
NoiseParam make_rough(double h, double h0 = 0.75);

// Throws std::invalid_argument when the structural invariants fail.
void check_structure(const NoiseParam& p);

// "regular:alpha=0.5,d=1" / "rough:H=0.3"
std::string theta_label(const NoiseParam& p);

bool same_family(const NoiseParam& a, const NoiseParam& b);

struct ExistenceReport {
    bool admissible = false;
    std::string condition_checked;
    double margin = 0.0;
};

double lower_endpoint_ell(Equation eq, double h0);

ExistenceReport validate_existence(const NoiseParam& p, Equation eq);

// check_structure plus validate_existence; throws on an inadmissible parameter.
void require_admissible(const NoiseParam& p, Equation eq);

}  // namespace anderson
