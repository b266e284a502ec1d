#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace fcvg {

/// 64-bit FNV-1a, used as a content fingerprint in manifests and regression fixtures.
class Fnv1a {
public:
    void update(std::span<const std::byte> bytes) {
        for (std::byte b : bytes) {
            state_ ^= static_cast<std::uint64_t>(b);
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(std::as_bytes(std::span(s.data(), s.size()))); }
    template <typename T>
    void update_values(std::span<const T> values) { update(std::as_bytes(values)); }

    std::uint64_t digest() const { return state_; }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace fcvg
