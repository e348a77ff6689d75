#include "fedecg/fed/algorithms.hpp"

namespace fedecg::fed {

const char* agg_kind_name(AggKind kind) {
    switch (kind) {
        case AggKind::FedAvg: return "fedavg";
        case AggKind::FedProx: return "fedprox";
        case AggKind::FedDyn: return "feddyn";
        case AggKind::Scaffold: return "scaffold";
    }
    return "?";
}

}  // namespace fedecg::fed
