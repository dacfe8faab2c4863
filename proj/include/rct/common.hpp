#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rct {

// Error taxonomy shared by the whole toolkit. The CLI maps `config` and
// `contract` to exit code 1 and `numerical` to exit code 2.
class Error : public std::runtime_error {
public:
    enum class Kind { config, contract, numerical };

    Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
    throw Error(Error::Kind::config, msg);
}
[[noreturn]] inline void throw_contract(const std::string& msg) {
    throw Error(Error::Kind::contract, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
    throw Error(Error::Kind::numerical, msg);
}

// All floating-point text output goes through this so reruns diff cleanly.
inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// FNV-1a, used for mesh/config fingerprints embedded in artifact headers.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_mix(std::uint64_t h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    return fnv1a64(&bits, sizeof(bits), h);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::int64_t v) {
    return fnv1a64(&v, sizeof(v), h);
}

inline std::string hex16(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Index-parallel loop with a deterministic gather contract: `fn(i)` writes only
// to slot i of some preallocated output, so results do not depend on the
// thread count.
template <typename F>
void parallel_for(int n, int threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rct
