#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "gearsim/dynamics.hpp"
#include "gearsim/mesh_stiffness.hpp"
#include "gearsim/profile_errors.hpp"
#include "test_support.hpp"

using namespace gearsim;
using gearsim::testing::rig_pair;

namespace {

Eigen::VectorXd random_gms(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1e8, 6e8);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = u(rng);
    return g;
}

double frobenius_rel(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]).squaredNorm();
        den += b[i].squaredNorm();
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(Mass, UnitInertiasGiveIdentity) {
    LumpedInertia li{1, 1, 1, 1, 1, 1, 1};
    EXPECT_EQ(assemble_mass(li), Eigen::MatrixXd::Identity(kDofCount, kDofCount));
}

TEST(Mass, LinearInGearDensity) {
    GearPair pair = rig_pair();
    const Eigen::MatrixXd m1 = assemble_mass(pair);
    pair.gear.material.density *= 2.0;
    const Eigen::MatrixXd m2 = assemble_mass(pair);
    for (int d : {kGearX, kGearY, kGearZ, kGearTheta}) EXPECT_DOUBLE_EQ(m2(d, d), 2.0 * m1(d, d));
    for (int d : {kPinionX, kPinionTheta, kMotorTheta, kLoadTheta, kCasingY}) EXPECT_EQ(m2(d, d), m1(d, d));
}

TEST(Mass, SymmetricPositiveDefinite) {
    const Eigen::MatrixXd m = assemble_mass(rig_pair());
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(m).info(), Eigen::Success);
    EXPECT_TRUE(m.isDiagonal());
}

TEST(Mass, RejectsNonPositiveInertia) {
    LumpedInertia li{1, 1, 1, 1, 1, 0, 1};
    EXPECT_THROW(assemble_mass(li), ConfigError);
}

TEST(Damping, RayleighCases) {
    const Eigen::MatrixXd m = assemble_mass(rig_pair());
    Eigen::MatrixXd k = assemble_k_const(StructuralParameters{});
    EXPECT_EQ(assemble_damping(m, k, 0.0, 0.0), Eigen::MatrixXd::Zero(kDofCount, kDofCount));
    EXPECT_EQ(assemble_damping(m, k, 3.0, 0.0), 3.0 * m);
    const Eigen::MatrixXd c = assemble_damping(m, k, 3.0, 1e-5);
    EXPECT_EQ(c, c.transpose());
    EXPECT_THROW(assemble_damping(m, k, -1.0, 0.0), ConfigError);
}

TEST(StiffnessCycle, ZeroMeshStiffnessLeavesConstantPart) {
    const StructuralParameters sp;
    const Eigen::MatrixXd kc = assemble_k_const(sp);
    const auto geom = mesh_geometry(rig_pair(), sp);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
    for (const auto& k : assemble_stiffness_cycle_naive(kc, zero, geom, 7)) EXPECT_EQ(k, kc);
    for (const auto& k : assemble_stiffness_cycle_fast(kc, zero, geom)) EXPECT_EQ(k, kc);
}

TEST(StiffnessCycle, SingleGridPointEvaluatesMidFace) {
    const StructuralParameters sp;
    const Eigen::MatrixXd kc = assemble_k_const(sp);
    const auto geom = mesh_geometry(rig_pair(), sp);
    const Eigen::VectorXd gms = random_gms(8, 1);
    const auto k = assemble_stiffness_cycle_naive(kc, gms, geom, 1);
    for (int i = 0; i < 8; ++i) EXPECT_TRUE(k[static_cast<std::size_t>(i)].isApprox(kc + geom.at(0.0) * gms(i), 1e-15));
}

TEST(StiffnessCycle, SymmetricAndMeshPartSemiDefinite) {
    const StructuralParameters sp;
    const Eigen::MatrixXd kc = assemble_k_const(sp);
    const auto geom = mesh_geometry(rig_pair(), sp);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Eigen::VectorXd gms = random_gms(32, seed);
        for (const auto& k : assemble_stiffness_cycle_naive(kc, gms, geom, 50)) EXPECT_EQ(k, k.transpose());
        for (const auto& k : assemble_stiffness_cycle_fast(kc, gms, geom)) {
            EXPECT_EQ(k, k.transpose());
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k - kc).eigenvalues();
            EXPECT_GE(ev.minCoeff(), -1e-9 * ev.maxCoeff());
        }
    }
    EXPECT_EQ(kc, kc.transpose());
}

TEST(StiffnessCycle, FastMatchesFineNaiveGrid) {
    const StructuralParameters sp;
    const Eigen::MatrixXd kc = assemble_k_const(sp);
    const auto geom = mesh_geometry(rig_pair(), sp);
    const Eigen::VectorXd gms = random_gms(16, 4);
    EXPECT_LT(frobenius_rel(assemble_stiffness_cycle_fast(kc, gms, geom), assemble_stiffness_cycle_naive(kc, gms, geom, 10000)),
              1e-8);
}

TEST(StiffnessCycle, ConstantMeshStiffnessGivesConstantCycle) {
    const StructuralParameters sp;
    const auto geom = mesh_geometry(rig_pair(), sp);
    const auto k = assemble_stiffness_cycle_fast(assemble_k_const(sp), Eigen::VectorXd::Constant(10, 3e8), geom);
    for (const auto& ki : k) EXPECT_EQ(ki, k.front());
}

TEST(StiffnessCycle, FaceWidthMoments) {
    const auto geom = mesh_geometry(rig_pair(), StructuralParameters{});
    const auto z = face_width_grid(geom.face_width, 100000);
    double m1 = 0.0, m2 = 0.0;
    for (double v : z) {
        m1 += v;
        m2 += v * v;
    }
    EXPECT_NEAR(m1 / z.size(), geom.mean_z, 1e-15);
    EXPECT_NEAR(m2 / z.size(), geom.mean_z2, 1e-9 * geom.mean_z2);
}

TEST(ExternalForces, ZeroConditionsGiveZero) {
    OperatingConditions oc;
    oc.load_torque_nm = 0.0;
    oc.input_speed_hz = 0.0;
    oc.gravity = false;
    const GearPair pair = rig_pair();
    EXPECT_EQ(assemble_static_forces(pair, lumped_inertia(pair), oc), Eigen::VectorXd::Zero(kDofCount));
}

TEST(ExternalForces, LoadTorqueOnLoadShaft) {
    const GearPair pair = rig_pair();
    const Eigen::VectorXd f = assemble_static_forces(pair, lumped_inertia(pair), OperatingConditions{});
    EXPECT_EQ(f(kLoadTheta), -10.0);
    EXPECT_DOUBLE_EQ(f(kMotorTheta), 10.0 * 17.0 / 38.0);
    EXPECT_LT(f(kCasingY), 0.0);
}

TEST(ExternalForces, NoErrorExcitationWithoutErrors) {
    const GearPair pair = rig_pair();
    const auto geom = mesh_geometry(pair, StructuralParameters{});
    const Eigen::VectorXd f0 = assemble_static_forces(pair, lumped_inertia(pair), OperatingConditions{});
    const Eigen::MatrixXd f = assemble_external_forces(f0, geom, Eigen::VectorXd::Zero(12));
    for (Eigen::Index i = 0; i < f.cols(); ++i) EXPECT_EQ(f.col(i), f0);
}

TEST(ExternalForces, FastMatchesNaive) {
    const GearPair pair = rig_pair();
    const auto geom = mesh_geometry(pair, StructuralParameters{});
    const Eigen::VectorXd f0 = assemble_static_forces(pair, lumped_inertia(pair), OperatingConditions{});
    const Eigen::VectorXd ke = random_gms(20, 8) * 1e-6;
    const Eigen::MatrixXd fast = assemble_external_forces(f0, geom, ke);
    const Eigen::MatrixXd naive = assemble_external_forces_naive(f0, geom, ke, 1000);
    EXPECT_LT((fast - naive).norm() / naive.norm(), 1e-12);
}

TEST(StaticDeflection, MeshCompressesAgainstTheLoad) {
    const GearPair pair = rig_pair();
    const StructuralParameters sp;
    const auto geom = mesh_geometry(pair, sp);
    const auto mesh = build_mesh(pair, ProfileErrorField::zero(17, 38), Healthy{});
    const GmsCurve c = gms_over_cycle(mesh, 128);
    const auto k = assemble_stiffness_cycle_fast(assemble_k_const(sp), c.stiffness, geom);
    OperatingConditions oc;
    oc.gravity = false;
    const Eigen::VectorXd f = assemble_static_forces(pair, lumped_inertia(pair), oc);
    const Eigen::VectorXd u = static_deflection(mean_stiffness(k), f);
    const double delta = geom.expected_projection().dot(u);
    EXPECT_GT(delta, 0.0);
    // Mesh reaction on the pinion balances the input torque.
    const double reaction = c.mean_stiffness() * delta * pair.pinion.base_radius();
    EXPECT_NEAR(reaction, f(kMotorTheta), 0.02 * f(kMotorTheta));
}
