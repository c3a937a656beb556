#pragma once

// Loop-only reimplementation of the SaucIR update used as an independent
// oracle. It deliberately shares no code with saucir::model: history is kept
// as full per-day arrays instead of rings, and every term is written out.

#include <vector>

namespace saucir::testing {

struct RefNode {
    double s, u, a, c, d, r2;
};

struct RefInputs {
    std::vector<RefNode> initial;
    std::vector<std::vector<double>> u_history;  // [node][k], oldest first, length = lag_u
    std::vector<std::vector<double>> a_history;  // [node][k], oldest first, length = lag_a
    std::vector<double> population;
    std::vector<double> alpha0, tau, zeta, beta, quarantine;
    double theta = 0.25;
    int lag_u = 5;
    int lag_a = 21;
    std::vector<std::vector<std::vector<double>>> gp_in;   // [t][n][m]
    std::vector<std::vector<std::vector<double>>> gp_out;  // [t][m][n]
};

/// Returns states [day][node] for days 0..days.
std::vector<std::vector<RefNode>> reference_saucir(const RefInputs& in, int days);

}  // namespace saucir::testing
