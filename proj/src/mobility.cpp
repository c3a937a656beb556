#include "saucir/mobility.hpp"

#include "saucir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace saucir::mobility {

namespace {

void check_day(const Matrix& f, std::span<const double> populations) {
    const std::size_t M = populations.size();
    if (f.rows() != M || f.cols() != M) {
        throw InvalidArgument("flow matrix is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                              " but there are " + std::to_string(M) + " populations");
    }
    for (std::size_t n = 0; n < M; ++n) {
        if (!(populations[n] > 0.0) || !std::isfinite(populations[n])) {
            throw InvalidArgument("population of node " + std::to_string(n) + " must be positive");
        }
        for (std::size_t m = 0; m < M; ++m) {
            const double v = f(n, m);
            if (!std::isfinite(v) || v < 0.0) {
                throw InvalidArgument("negative or non-finite flow into node " + std::to_string(n) + " from node " +
                                      std::to_string(m));
            }
            if (n == m && v != 0.0) {
                throw InvalidArgument("nonzero self-flow at node " + std::to_string(n));
            }
        }
    }
}

}  // namespace

MobilityRates rates_from_flows(const Matrix& f, std::span<const double> populations) {
    check_day(f, populations);
    const std::size_t M = populations.size();
    MobilityRates r{std::vector<double>(M, 0.0), std::vector<double>(M, 0.0), Matrix::square(M), Matrix::square(M)};

    std::vector<double> row_sum(M, 0.0);  // F_{n.}: total into n
    std::vector<double> col_sum(M, 0.0);  // F_{.n}: total out of n
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            row_sum[n] += f(n, m);
            col_sum[m] += f(n, m);
        }
    }
    for (std::size_t n = 0; n < M; ++n) {
        r.gamma_in[n] = row_sum[n] / populations[n];
        r.gamma_out[n] = col_sum[n] / populations[n];
    }
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            if (row_sum[n] > 0.0) {
                r.p_in(n, m) = f(n, m) / row_sum[n];
            }
            if (col_sum[n] > 0.0) {
                r.p_out(m, n) = f(m, n) / col_sum[n];
            }
        }
    }
    return r;
}

MobilitySchedule schedule_from_flows(const Tensor3& flows, std::span<const double> populations) {
    const std::size_t M = populations.size();
    auto s = MobilitySchedule::zeros(flows.days(), M);
    for (std::size_t t = 0; t < flows.days(); ++t) {
        check_day(flows.day(t), populations);
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                // gamma_in_n * P^in_nm collapses to F_nm / N_n; gamma_out_n * P^out_mn to F_mn / N_n.
                s.gp_in(t, n, m) = flows(t, n, m) / populations[n];
                s.gp_out(t, m, n) = flows(t, m, n) / populations[n];
            }
        }
    }
    return s;
}

MobilitySchedule slice(const MobilitySchedule& schedule, std::size_t first, std::size_t count) {
    if (first + count > schedule.horizon()) {
        throw InvalidArgument("schedule slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                              ") exceeds horizon " + std::to_string(schedule.horizon()));
    }
    const std::size_t M = schedule.node_count();
    auto out = MobilitySchedule::zeros(count, M);
    for (std::size_t t = 0; t < count; ++t) {
        out.gp_in.set_day(t, schedule.gp_in.day(first + t));
        out.gp_out.set_day(t, schedule.gp_out.day(first + t));
    }
    return out;
}

AggregateRates aggregate(const MobilitySchedule& schedule) {
    const std::size_t M = schedule.node_count();
    AggregateRates agg{Matrix::square(M), Matrix::square(M), schedule.horizon()};
    for (std::size_t t = 0; t < schedule.horizon(); ++t) {
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                agg.c_in(n, m) += schedule.gp_in(t, n, m);
                agg.c_out(n, m) += schedule.gp_out(t, n, m);
            }
        }
    }
    return agg;
}

std::vector<BalanceViolation> check_balance(const AggregateRates& agg, std::span<const double> populations, double tol) {
    if (!(tol > 0.0)) {
        throw InvalidArgument("balance tolerance must be positive");
    }
    std::vector<BalanceViolation> out;
    const std::size_t M = populations.size();
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            if (n == m) {
                continue;
            }
            const double lhs = agg.c_in(n, m) * populations[n];
            const double rhs = agg.c_out(n, m) * populations[m];
            if (!(std::abs(lhs - rhs) <= tol)) {
                out.push_back({n, m, lhs, rhs});
            }
        }
    }
    return out;
}

double default_balance_tolerance(std::span<const double> populations) {
    double max_n = 0.0;
    for (double n : populations) {
        max_n = std::max(max_n, n);
    }
    return 1e-9 * max_n;
}

double balance_residual(const AggregateRates& agg, std::span<const double> populations) {
    double worst = 0.0;
    const std::size_t M = populations.size();
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            if (n != m) {
                worst = std::max(worst, std::abs(agg.c_in(n, m) * populations[n] - agg.c_out(n, m) * populations[m]));
            }
        }
    }
    return worst;
}

MobilitySchedule scale_schedule(const MobilitySchedule& schedule, double multiplier) {
    if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
        throw InvalidArgument("mobility multiplier must be a finite non-negative number");
    }
    MobilitySchedule out = schedule;
    for (double& v : out.gp_in.values()) {
        v *= multiplier;
    }
    for (double& v : out.gp_out.values()) {
        v *= multiplier;
    }
    return out;
}

AggregateRates scale_aggregate(const AggregateRates& agg, double multiplier) {
    if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
        throw InvalidArgument("aggregate multiplier must be a finite non-negative number");
    }
    AggregateRates out = agg;
    for (double& v : out.c_in.values()) {
        v *= multiplier;
    }
    for (double& v : out.c_out.values()) {
        v *= multiplier;
    }
    return out;
}

}  // namespace saucir::mobility
