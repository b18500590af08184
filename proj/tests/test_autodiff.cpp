// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "support/gradcheck.hpp"

using namespace gpm;

TEST_CASE("every op matches central differences") {
    for (const std::string& op : testing::gradcheck_ops()) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto r = testing::op_gradcheck(op, seed);
            INFO(op, " seed ", seed, " worst ", r.worst);
            CHECK(r.max_relative_error <= 1e-4);
        }
    }
}

TEST_CASE("joint loss gradient through the whole network") {
    for (Variant v : {Variant::conv3d_gru, Variant::conv3d_linear, Variant::conv2d_gru}) {
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            const auto r = testing::model_gradcheck(v, seed);
            INFO(to_string(v), " seed ", seed, " worst ", r.worst);
            CHECK(r.max_relative_error <= 1e-3);
        }
    }
}
