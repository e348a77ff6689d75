#pragma once

#include <cstdint>
#include <limits>

namespace fedecg::optim {

// Shared training schedule: up to max_rounds epochs/rounds, LR x0.1 after a
// 16-round plateau of the monitored value, stop after 48 stagnant rounds.
struct TrainSchedule {
    std::int64_t max_rounds = 256;
    std::int64_t plateau_patience = 16;
    std::int64_t early_stop_patience = 48;
    double lr_factor = 0.1;
    double min_lr = 1e-6;
    std::int64_t batch_size = 32;
};

// Absolute improvement below this does not count as progress.
inline constexpr double kMinImprove = 1e-4;

struct MonitorState {
    double best_value = std::numeric_limits<double>::infinity();
    std::int64_t best_round = -1;
    std::int64_t rounds_since_improve = 0;  // drives early stopping
    std::int64_t plateau_counter = 0;       // drives LR reduction; resets on reduction

    // Folds one monitored value (lower is better); call once per round.
    // Returns true when the value improved on the best seen so far.
    bool fold(double value, std::int64_t round) {
        if (value < best_value - kMinImprove) {
            best_value = value;
            best_round = round;
            rounds_since_improve = 0;
            plateau_counter = 0;
            return true;
        }
        rounds_since_improve += 1;
        plateau_counter += 1;
        return false;
    }
};

// LR reduction on plateau; resets only the plateau counter.
inline double plateau_update(MonitorState& monitor, const TrainSchedule& sched, double current_lr) {
    if (monitor.plateau_counter >= sched.plateau_patience) {
        monitor.plateau_counter = 0;
        const double reduced = current_lr * sched.lr_factor;
        return reduced < sched.min_lr ? sched.min_lr : reduced;
    }
    return current_lr;
}

enum class StopDecision { Continue, Stop };

inline StopDecision early_stop_check(const MonitorState& monitor, const TrainSchedule& sched) {
    return monitor.rounds_since_improve >= sched.early_stop_patience ? StopDecision::Stop
                                                                     : StopDecision::Continue;
}

}  // namespace fedecg::optim
