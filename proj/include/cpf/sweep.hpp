#pragma once

#include <cstdint>

#include "cpf/train.hpp"

namespace cpf {

// Loss surface along a 1-D parameter ray under common random numbers: every
// grid point re-seeds the same draw stream, so differences between adjacent
// losses come from the parameters alone. Both resamplers are evaluated on
// identical draws; the continuous scheme should keep adjacent jumps at the
// scale of the grid spacing while the multinomial one jumps by whole
// inter-particle distances whenever a weight boundary crosses a uniform.
struct SweepResult {
    std::vector<double> taus;
    std::vector<double> loss_continuous;
    std::vector<double> loss_multinomial;
    double max_jump_continuous = 0.0;
    double max_jump_multinomial = 0.0;
};

SweepResult sweep_theta_ray(const RunConfig& cfg, const SeriesDataset& normalized_data,
                            int grid_points, double radius, int batch_windows,
                            std::uint64_t crn_seed);

}  // namespace cpf
