#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mcfsound {

using Vec3 = Eigen::Vector3d;
using VertexId = std::int32_t;
using FaceId = std::int32_t;

inline constexpr VertexId kNoVertex = -1;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base error for every module. Carries the module name and, when known,
/// the simulation time and the offending vertex/face index so the CLI can
/// report where a run broke.
class Error : public std::runtime_error {
  public:
    Error(std::string module, const std::string& message, double time = kNaN, long entity = -1)
        : std::runtime_error(format(module, message, time, entity)), module_(std::move(module)),
          message_(message), time_(time), entity_(entity) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& message() const noexcept { return message_; }
    double time() const noexcept { return time_; }
    long entity() const noexcept { return entity_; }

    Error with_time(double t) const { return Error(module_, message_, t, entity_); }

  private:
    static std::string format(const std::string& module, const std::string& message, double time,
                              long entity) {
        std::ostringstream os;
        os << "[" << module << "]";
        if (time == time) os << " t=" << time;
        if (entity >= 0) os << " entity=" << entity;
        os << ": " << message;
        return os.str();
    }

    std::string module_;
    std::string message_;
    double time_;
    long entity_;
};

struct MeshError : Error {
    explicit MeshError(const std::string& msg, long entity = -1) : Error("mesh_core", msg, kNaN, entity) {}
};

struct DifferentialError : Error {
    explicit DifferentialError(const std::string& msg, long entity = -1)
        : Error("differential", msg, kNaN, entity) {}
};

struct FlowError : Error {
    FlowError(const std::string& msg, double time, long entity = -1) : Error("flow", msg, time, entity) {}
};

struct SpectrumError : Error {
    explicit SpectrumError(const std::string& msg, long entity = -1) : Error("spectrum", msg, kNaN, entity) {}
};

struct SoundError : Error {
    explicit SoundError(const std::string& msg, long entity = -1) : Error("sound", msg, kNaN, entity) {}
};

}  // namespace mcfsound
