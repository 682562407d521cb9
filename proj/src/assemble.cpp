#include "grasp/assemble.hpp"

#include <cmath>
#include <map>

namespace grasp {

Mat3 build_contact_frame(const Vec3& normal) {
  // Axis of the smallest-magnitude component; ties go to the higher index so
  // that e.g. normal (0,0,1) yields t1 = (1,0,0), t2 = (0,1,0).
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(normal[i]) <= std::abs(normal[k])) k = i;
  const Vec3 axis = Vec3::Unit(k);
  const Vec3 t1 = axis.cross(normal).normalized();
  const Vec3 t2 = normal.cross(t1);
  Mat3 frame;
  frame.col(0) = t1;
  frame.col(1) = t2;
  frame.col(2) = normal;
  return frame;
}

MatX build_friction_pyramid(const Contact& contact, const Mat3& frame) {
  const int m = contact.edge_count;
  MatX edges(3, m);
  const Vec3 t1 = frame.col(0), t2 = frame.col(1), n = frame.col(2);
  for (int k = 0; k < m; ++k) {
    const double theta = 2.0 * M_PI * k / m;
    edges.col(k) =
        (n + contact.mu * (std::cos(theta) * t1 + std::sin(theta) * t2)).normalized();
  }
  return edges;
}

AssembledGrasp assemble(const GraspScene& scene) {
  validate_scene(scene);

  // link name -> (global joint start index, joint count within chain)
  std::map<std::string, std::pair<int, int>> links;
  int joint_base = 0;
  for (const auto& chain : scene.chains) {
    for (const auto& link : chain.links)
      links[link.name] = {joint_base, link.joint_count};
    joint_base += static_cast<int>(chain.joints.size());
  }

  AssembledGrasp grasp;
  grasp.n = static_cast<int>(scene.contacts.size());
  grasp.d = scene.joint_count();
  grasp.L = scene.characteristic_length;

  std::vector<RevoluteJoint> joints;
  joints.reserve(grasp.d);
  for (const auto& chain : scene.chains)
    joints.insert(joints.end(), chain.joints.begin(), chain.joints.end());

  grasp.E = 0;
  for (const auto& contact : scene.contacts) grasp.E += contact.edge_count;

  grasp.G = MatX::Zero(6, 3 * grasp.n);
  grasp.J = MatX::Zero(3 * grasp.n, grasp.d);
  grasp.D = MatX::Zero(3 * grasp.n, grasp.E);
  grasp.F = -MatX::Identity(grasp.E, grasp.E);
  grasp.normal_rows = MatX::Zero(grasp.n, grasp.E);
  grasp.normal_select = MatX::Zero(grasp.n, 3 * grasp.n);

  int edge_col = 0;
  for (int i = 0; i < grasp.n; ++i) {
    const Contact& contact = scene.contacts[i];
    const Mat3 frame = build_contact_frame(contact.normal);
    grasp.contact_frames.push_back(frame);
    grasp.contact_ids.push_back(contact.id);
    grasp.mu.push_back(contact.mu);
    grasp.edge_offset.push_back(edge_col);
    grasp.edge_count.push_back(contact.edge_count);

    grasp.G.block<3, 3>(0, 3 * i) = frame;
    grasp.G.block<3, 3>(3, 3 * i) = skew(contact.position) * frame / grasp.L;

    auto it = links.find(contact.link);
    if (contact.link != kPalmLink) {
      if (it == links.end())
        throw SceneError("assembly error: contact '" + contact.id +
                         "' references undeclared link '" + contact.link + "'");
      const auto [base, count] = it->second;
      for (int j = 0; j < count; ++j) {
        const RevoluteJoint& joint = joints[base + j];
        grasp.J.block<3, 1>(3 * i, base + j) =
            frame.transpose() * joint.axis.cross(contact.position - joint.origin);
      }
    }

    // Pyramid expressed in the contact frame so that c = D beta stacks
    // contact-local forces with the normal component third.
    const MatX pyramid = frame.transpose() * build_friction_pyramid(contact, frame);
    grasp.D.block(3 * i, edge_col, 3, contact.edge_count) = pyramid;
    grasp.normal_rows.block(i, edge_col, 1, contact.edge_count) = pyramid.row(2);
    grasp.normal_select(i, 3 * i + 2) = 1.0;
    edge_col += contact.edge_count;
  }

  return grasp;
}

}  // namespace grasp
