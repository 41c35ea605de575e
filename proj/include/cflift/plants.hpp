#pragma once

#include <functional>

#include "cflift/dataset.hpp"
#include "cflift/state_space.hpp"

namespace cflift {

enum class PlantKind { pendulum, vdp, uas };

const char* plant_name(PlantKind k);
PlantKind plant_from_name(const std::string& name);

struct Plant {
    PlantKind kind = PlantKind::pendulum;
    Index n = 2;
    Index m = 1;
    // UAS constants
    double mass = 5.71;
    double inertia = 1.57;
    double gravity = 9.81;

    Vector dynamics(const Vector& x, const Vector& u) const;
    Matrix jacobian_x(const Vector& x, const Vector& u) const;
    Matrix jacobian_u(const Vector& x, const Vector& u) const;
};

Plant make_plant(PlantKind kind);

// Analytic Jacobians at an equilibrium, continuous time.
std::pair<Matrix, Matrix> linearize(const Plant& plant, const Vector& x_eq, const Vector& u_eq);

// Level-flight trim: x* = (q, v_x, v_z, theta, x_c, h) = (0, V, 0, 0, 0, h0)
// with u* = (0, -m g, 0). x_c is tracked relative to the moving reference
// V * t, so deviation dynamics are time invariant.
std::pair<Vector, Vector> uas_trim(double airspeed, double altitude = 100.0);

// Adaptive Bogacki-Shampine RK23. Input held constant over each dt interval;
// the stepper restarts at sample boundaries and returns states at samples.
struct IntegratorOptions {
    double rtol = 1e-3;
    double atol = 1e-6;
};

using OdeRhs = std::function<Vector(const Vector&, const Vector&)>;

std::vector<Vector> integrate_ode(const OdeRhs& f, const Vector& x0,
                                  const std::vector<Vector>& u_seq, double dt,
                                  const IntegratorOptions& opts = {});

std::vector<Vector> integrate(const Plant& plant, const Vector& x0,
                              const std::vector<Vector>& u_seq, double dt,
                              const IntegratorOptions& opts = {});

// Dynamics of the deviation from trim; reduces to plain dynamics when the
// trim is zero.
OdeRhs deviation_dynamics(const Plant& plant, const Vector& trim_x, const Vector& trim_u);

struct DataGenConfig {
    int trajectories = 100;
    int horizon = 100;
    double dt = 0.1;
    Vector x0_box;              // per-channel half-widths, deviation coordinates
    double input_amplitude = 0.5;
    bool closed_loop = false;
    bool corner_initial_states = false;  // 2^n corner sweep instead of sampling
    Vector meas_noise_std;      // per-channel, closed loop only
    Vector proc_noise_bound;    // per-channel uniform bound, closed loop only
    std::uint64_t seed = 0;
    double airspeed = 15.0;     // UAS trim
    Matrix controller_q;        // closed-loop regulator weights
    Matrix controller_r;

    void validate(const Plant& plant) const;
};

// Regulator for closed-loop data generation, on the ZOH-discretized trim
// linearization.
Matrix lqr_controller(const Plant& plant, double dt, const Vector& trim_x, const Vector& trim_u,
                      const Matrix& Q, const Matrix& R);

Dataset generate_dataset(const Plant& plant, const DataGenConfig& cfg);

}  // namespace cflift
