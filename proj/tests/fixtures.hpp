#pragma once

// Canonical scenes shared by the unit and acceptance suites. The envelope
// grasp is a planar two-finger claw: each finger scoops under the object
// with a 45-degree proximal pad and pinches its upper side with a vertical
// distal pad. Distal pinch forces pass through the base joints, so a distal
// torque command t produces a pinch preload of exactly t / 0.045 newtons.

#include <cmath>
#include <random>
#include <string>

#include "grasp/assemble.hpp"
#include "grasp/scene.hpp"

namespace grasp::fixtures {

/// One palm contact at the origin, normal +Z.
inline GraspScene palm_push(double mu = 0.0, int edges = 8) {
  GraspScene scene;
  scene.object_name = "puck";
  scene.characteristic_length = 1.0;
  scene.contacts.push_back({"c0", Vec3::Zero(), Vec3::UnitZ(), mu, edges, kPalmLink});
  scene.actuation = DirectActuation{VecX::Zero(0)};
  return scene;
}

/// Two palm contacts with opposed normals at offset positions; any wrench
/// along a normal is torque-infeasible.
inline GraspScene opposed_palms() {
  GraspScene scene;
  scene.object_name = "bar";
  scene.characteristic_length = 1.0;
  scene.contacts.push_back({"lo", Vec3(-0.05, 0, 0), Vec3::UnitZ(), 0.0, 8, kPalmLink});
  scene.contacts.push_back({"hi", Vec3(0.05, 0, 0), -Vec3::UnitZ(), 0.0, 8, kPalmLink});
  scene.actuation = DirectActuation{VecX::Zero(0)};
  return scene;
}

/// One revolute joint pressing one contact against the object from below.
inline GraspScene single_joint(double tau_c, double mu = 0.5, bool closing_sign_ok = true) {
  GraspScene scene;
  scene.object_name = "lever";
  scene.characteristic_length = 0.1;
  KinematicChain chain;
  const Vec3 axis = closing_sign_ok ? Vec3(0, 0, 1) : Vec3(0, 0, -1);
  chain.joints.push_back({axis, Vec3::Zero()});
  chain.links.push_back({"link", 1});
  scene.chains.push_back(chain);
  scene.contacts.push_back({"c0", Vec3(0.1, 0, 0), Vec3::UnitY(), mu, 8, "link"});
  VecX tau(1);
  tau << tau_c;
  scene.actuation = DirectActuation{tau};
  return scene;
}

/// Canonical planar two-finger enveloping grasp (4 contacts, mu = 0.5).
/// Each finger descends from above: a vertical pinch pad on the distal link
/// at the object's side, and a scoop pad curling under the lower corner.
/// The scoop slope (tan = 0.4) sits inside the friction cone, so downward
/// loads jam against it. The joint stack sits 45 mm and 75 mm above the
/// horizontal pinch-normal line and only 0.5 mm inboard of the pad, so the
/// pinch normal has a 0.045 m arm about the distal joint while pinch
/// friction has almost none: distal_torque preloads the pinch at
/// distal_torque / 0.045 newtons. Proximal joints are commanded zero.
inline GraspScene envelope(double distal_torque) {
  GraspScene scene;
  scene.object_name = "box";
  scene.characteristic_length = 0.1;
  const double cn = 2.5 / std::sqrt(7.25);  // cos of the scoop slope
  const double sn = 1.0 / std::sqrt(7.25);  // sin

  scene.contacts.push_back({"left_prox", Vec3(-0.030, -0.030, 0), Vec3(cn, sn, 0), 0.5, 8,
                            "left_proximal"});
  scene.contacts.push_back({"left_dist", Vec3(-0.045, 0.030, 0), Vec3(1, 0, 0), 0.5, 8,
                            "left_distal"});
  scene.contacts.push_back({"right_prox", Vec3(0.030, -0.030, 0), Vec3(-cn, sn, 0), 0.5, 8,
                            "right_proximal"});
  scene.contacts.push_back({"right_dist", Vec3(0.045, 0.030, 0), Vec3(-1, 0, 0), 0.5, 8,
                            "right_distal"});

  KinematicChain left;
  left.joints.push_back({Vec3::UnitZ(), Vec3(-0.0445, 0.105, 0)});
  left.joints.push_back({Vec3::UnitZ(), Vec3(-0.0445, 0.075, 0)});
  left.links.push_back({"left_proximal", 1});
  left.links.push_back({"left_distal", 2});
  scene.chains.push_back(left);

  KinematicChain right;
  right.joints.push_back({-Vec3::UnitZ(), Vec3(0.0445, 0.105, 0)});
  right.joints.push_back({-Vec3::UnitZ(), Vec3(0.0445, 0.075, 0)});
  right.links.push_back({"right_proximal", 1});
  right.links.push_back({"right_distal", 2});
  scene.chains.push_back(right);

  VecX tau(4);
  tau << 0.0, distal_torque, 0.0, distal_torque;
  scene.actuation = DirectActuation{tau};
  return scene;
}

/// Pinch preload force [N] produced by envelope(distal_torque).
inline double envelope_pinch_force(double distal_torque) { return distal_torque / 0.045; }

/// Tendon-driven two-finger gripper: proximal pads tilted up, distal pads
/// tilted down (3-4-5 slopes) so either tendon preload loads all four
/// contacts. Shared tendons with differentials: proximal arm 5 mm, distal
/// arms 1.6 mm (proximal joints) and 5 mm (distal joints).
inline GraspScene underactuated(double f_proximal, double f_distal) {
  GraspScene scene;
  scene.object_name = "hexbar";
  scene.characteristic_length = 0.1;

  scene.contacts.push_back({"left_prox", Vec3(-0.030, -0.030, 0), Vec3(0.8, 0.6, 0), 0.5, 8,
                            "left_proximal"});
  scene.contacts.push_back({"left_dist", Vec3(-0.030, 0.030, 0), Vec3(0.8, -0.6, 0), 0.5, 8,
                            "left_distal"});
  scene.contacts.push_back({"right_prox", Vec3(0.030, -0.030, 0), Vec3(-0.8, 0.6, 0), 0.5, 8,
                            "right_proximal"});
  scene.contacts.push_back({"right_dist", Vec3(0.030, 0.030, 0), Vec3(-0.8, -0.6, 0), 0.5, 8,
                            "right_distal"});

  KinematicChain left;
  left.joints.push_back({Vec3::UnitZ(), Vec3(-0.090, 0.075, 0)});
  left.joints.push_back({Vec3::UnitZ(), Vec3(-0.040, 0.105, 0)});
  left.links.push_back({"left_proximal", 1});
  left.links.push_back({"left_distal", 2});
  scene.chains.push_back(left);

  KinematicChain right;
  right.joints.push_back({-Vec3::UnitZ(), Vec3(0.090, 0.075, 0)});
  right.joints.push_back({-Vec3::UnitZ(), Vec3(0.040, 0.105, 0)});
  right.links.push_back({"right_proximal", 1});
  right.links.push_back({"right_distal", 2});
  scene.chains.push_back(right);

  TendonActuation tendon;
  tendon.R = MatX::Zero(4, 2);
  tendon.R << 0.005, 0.0016,
              0.0,   0.005,
              0.005, 0.0016,
              0.0,   0.005;
  tendon.f_c = VecX::Zero(2);
  tendon.f_c << f_proximal, f_distal;
  scene.actuation = tendon;
  return scene;
}

inline Vec6 force_wrench(double fx, double fy, double fz) {
  Vec6 w = Vec6::Zero();
  w[0] = fx;
  w[1] = fy;
  w[2] = fz;
  return w;
}

/// Random small scene for solver cross-checks. Closing-sign conventions are
/// deliberately not enforced; infeasible preloads must agree between solver
/// paths too.
template <class Rng>
GraspScene random_scene(Rng& rng) {
  std::uniform_int_distribution<int> n_contacts(1, 3);
  std::uniform_int_distribution<int> n_joints(0, 2);
  std::uniform_int_distribution<int> edge_pick(0, 2);
  std::uniform_real_distribution<double> unif(-0.05, 0.05);
  std::uniform_real_distribution<double> mu_pick(0.0, 0.8);
  std::uniform_real_distribution<double> cmd(0.0, 0.2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int edges[] = {3, 4, 6};

  GraspScene scene;
  scene.object_name = "random";
  scene.characteristic_length = 0.1;

  const int d = n_joints(rng);
  if (d > 0) {
    KinematicChain chain;
    for (int j = 0; j < d; ++j) {
      Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
      while (axis.norm() < 1e-3) axis = Vec3(gauss(rng), gauss(rng), gauss(rng));
      chain.joints.push_back({axis.normalized(), Vec3(unif(rng), unif(rng), unif(rng))});
    }
    for (int j = 0; j < d; ++j) chain.links.push_back({"link" + std::to_string(j), j + 1});
    scene.chains.push_back(chain);
  }

  const int n = n_contacts(rng);
  for (int i = 0; i < n; ++i) {
    Vec3 normal(gauss(rng), gauss(rng), gauss(rng));
    while (normal.norm() < 1e-3) normal = Vec3(gauss(rng), gauss(rng), gauss(rng));
    std::string link = kPalmLink;
    if (d > 0 && (rng() % 2 == 0)) link = "link" + std::to_string(rng() % d);
    scene.contacts.push_back({"c" + std::to_string(i), Vec3(unif(rng), unif(rng), unif(rng)),
                              normal.normalized(), mu_pick(rng), edges[edge_pick(rng)], link});
  }

  if (d > 0 && (rng() % 3 == 0)) {
    TendonActuation tendon;
    const int na = std::min(d, 1 + static_cast<int>(rng() % 2));
    tendon.R = MatX::Zero(d, na);
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < na; ++l) tendon.R(j, l) = 0.001 + 0.009 * mu_pick(rng);
    tendon.f_c = VecX::Zero(na);
    for (int l = 0; l < na; ++l) tendon.f_c[l] = 5.0 * mu_pick(rng);
    scene.actuation = tendon;
  } else {
    VecX tau(d);
    for (int j = 0; j < d; ++j) tau[j] = cmd(rng);
    scene.actuation = DirectActuation{tau};
  }
  return scene;
}

template <class Rng>
Vec6 random_wrench(Rng& rng, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec6 w;
  for (int i = 0; i < 6; ++i) w[i] = gauss(rng);
  return w;
}

/// Random direct-actuation scene paired with a wrench that an in-cone
/// contact force distribution balances with joint torques at or above the
/// command, so the passive response problem is feasible by construction.
template <class Rng>
bool random_direct_feasible(Rng& rng, GraspScene& scene_out, Vec6& w_out) {
  std::uniform_real_distribution<double> beta_draw(0.0, 2.0);
  std::uniform_real_distribution<double> frac(0.0, 0.9);
  for (int attempt = 0; attempt < 50; ++attempt) {
    GraspScene scene = random_scene(rng);
    if (scene.joint_count() == 0) continue;
    if (!std::holds_alternative<DirectActuation>(scene.actuation)) continue;
    const AssembledGrasp grasp = assemble(scene);
    for (int draw = 0; draw < 20; ++draw) {
      VecX beta(grasp.E);
      for (int e = 0; e < grasp.E; ++e) beta[e] = beta_draw(rng);
      const VecX tau0 = grasp.J.transpose() * (grasp.D * beta);
      if (tau0.size() > 0 && tau0.minCoeff() < 0.0) continue;
      VecX tau_c(tau0.size());
      for (int j = 0; j < tau0.size(); ++j) tau_c[j] = frac(rng) * tau0[j];
      scene.actuation = DirectActuation{tau_c};
      scene_out = scene;
      w_out = -(grasp.G * (grasp.D * beta));
      return true;
    }
  }
  return false;
}

inline Vec6 unit6(int index) {
  Vec6 w = Vec6::Zero();
  w[index] = 1.0;
  return w;
}

}  // namespace grasp::fixtures
