#pragma once

#include <cstdint>
#include <string>

#include "csod/net.hpp"
#include "csod/optim.hpp"

namespace csod {

// Flat key=value run configuration with dotted keys (net.*, opt.*). Unknown
// keys are rejected; '#' starts a comment.
struct RunConfig {
    NetConfig net;
    OptimizerConfig optimizer;
    int epochs{18};
    int accumulation{10};
    double base_lr{5e-5};
    std::uint64_t seed{7};
    std::string data_root{"data"};
    std::string out_dir{"out"};

    void validate() const;
    static RunConfig parse_text(const std::string& text);
    static RunConfig parse_file(const std::string& path);
};

}  // namespace csod
