#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "singletsim/errors.hpp"

namespace singletsim {

/**
 * A sampled series: one observable and the singlet population of every pair
 * at each sweep value. `readout_pair` is the 0-based pair the observable was
 * read from, or -1 when it is not tied to a pair.
 */
struct Trace {
    std::string sweep_name = "time_s";
    bool sweep_is_time = true;
    std::vector<double> sweep;
    std::vector<double> observable;
    std::vector<std::vector<double>> pair_singlet;
    int readout_pair = -1;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

    [[nodiscard]] std::size_t size() const noexcept { return sweep.size(); }

    void validate() const {
        if (observable.size() != sweep.size()) {
            throw InputError("trace sweep and observable lengths differ");
        }
        for (const auto& col : pair_singlet) {
            if (col.size() != sweep.size()) {
                throw InputError("trace pair column length differs from sweep length");
            }
            for (double v : col) {
                if (!std::isfinite(v)) throw InputError("trace values must be finite");
            }
        }
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            if (!std::isfinite(sweep[i]) || !std::isfinite(observable[i])) {
                throw InputError("trace values must be finite");
            }
        }
    }
};

}  // namespace singletsim
