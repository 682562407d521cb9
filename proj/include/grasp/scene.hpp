#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "grasp/types.hpp"

namespace grasp {

/// Scene file violated the schema or an invariant. The message names the
/// offending field / contact / joint.
struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Violation of a programmatic precondition (dimension mismatch etc).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Reserved link name for contacts on a fixed (non-articulated) part of the
/// hand. Palm contacts have an all-zero Jacobian block.
inline constexpr const char* kPalmLink = "palm";

struct Contact {
  std::string id;
  Vec3 position = Vec3::Zero();  // [m], object frame, CoM at origin
  Vec3 normal = Vec3::UnitZ();   // unit; points from the surface into the object
  double mu = 0.0;               // Coulomb friction coefficient
  int edge_count = 8;            // friction pyramid discretization
  std::string link;              // chain link name, or "palm"
};

/// Revolute joint at the grasp configuration. Scene authors must orient the
/// axis so that positive rotation closes the hand on the object; the
/// validator cannot check this geometrically.
struct RevoluteJoint {
  Vec3 axis = Vec3::UnitZ();     // unit
  Vec3 origin = Vec3::Zero();    // [m], object frame
};

/// A link is moved by the first `joint_count` joints of its chain.
struct ChainLink {
  std::string name;
  int joint_count = 0;
};

struct KinematicChain {
  std::vector<RevoluteJoint> joints;
  std::vector<ChainLink> links;
};

struct DirectActuation {
  VecX tau_c;  // commanded joint torques [N·m], one per joint, each >= 0
};

struct TendonActuation {
  MatX R;    // (joints x actuators) tendon moment arms [m]
  VecX f_c;  // commanded actuator forces [N], each >= 0
};

using Actuation = std::variant<DirectActuation, TendonActuation>;

struct GraspScene {
  std::string object_name;
  double characteristic_length = 0.0;  // L [m]; wrench torque rows carry 1/L
  std::vector<Contact> contacts;
  std::vector<KinematicChain> chains;
  Actuation actuation = DirectActuation{VecX::Zero(0)};

  int joint_count() const;
  int actuator_count() const;  // joints for Direct, columns of R for Tendon
};

/// Parse a scene file (JSON document) and validate all invariants.
/// Throws SceneError naming the offending field or entity.
GraspScene parse_scene(const std::string& text);

/// Invariant checks shared by parse_scene and programmatic construction.
void validate_scene(const GraspScene& scene);

}  // namespace grasp
