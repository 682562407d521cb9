#include "grasp/scene.hpp"

#include <Eigen/QR>
#include <set>

#include "json.hpp"

namespace grasp {

namespace {

using nlohmann::json;

constexpr double kUnitTol = 1e-9;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SceneError("parse error: " + where + ": " + what);
}

Vec3 read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(where, "expected 3 numbers");
  for (const auto& v : j)
    if (!v.is_number()) fail(where, "expected 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, "missing field '" + key + "'");
  return *it;
}

}  // namespace

int GraspScene::joint_count() const {
  int d = 0;
  for (const auto& chain : chains) d += static_cast<int>(chain.joints.size());
  return d;
}

int GraspScene::actuator_count() const {
  if (const auto* tendon = std::get_if<TendonActuation>(&actuation))
    return static_cast<int>(tendon->R.cols());
  return joint_count();
}

GraspScene parse_scene(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneError(std::string("parse error: not a valid JSON document: ") + e.what());
  }
  if (!root.is_object()) fail("document", "expected an object");

  GraspScene scene;

  const json& object = require(root, "object", "document");
  scene.object_name = require(object, "name", "object").get<std::string>();
  const json& length = require(object, "characteristic_length", "object");
  if (!length.is_number()) fail("object.characteristic_length", "expected a number");
  scene.characteristic_length = length.get<double>();

  const json& contacts = require(root, "contacts", "document");
  if (!contacts.is_array()) fail("contacts", "expected an array");
  int ci = 0;
  for (const auto& jc : contacts) {
    const std::string where = "contacts[" + std::to_string(ci++) + "]";
    Contact c;
    c.id = require(jc, "id", where).get<std::string>();
    c.position = read_vec3(require(jc, "position", where), where + ".position");
    c.normal = read_vec3(require(jc, "normal", where), where + ".normal");
    const json& mu = require(jc, "mu", where);
    if (!mu.is_number()) fail(where + ".mu", "expected a number");
    c.mu = mu.get<double>();
    if (jc.contains("edge_count")) {
      if (!jc["edge_count"].is_number_integer()) fail(where + ".edge_count", "expected an integer");
      c.edge_count = jc["edge_count"].get<int>();
    }
    c.link = require(jc, "link", where).get<std::string>();
    scene.contacts.push_back(std::move(c));
  }

  if (root.contains("chains")) {
    const json& chains = require(root, "chains", "document");
    if (!chains.is_array()) fail("chains", "expected an array");
    int ki = 0;
    for (const auto& jk : chains) {
      const std::string where = "chains[" + std::to_string(ki++) + "]";
      KinematicChain chain;
      const json& joints = require(jk, "joints", where);
      if (!joints.is_array()) fail(where + ".joints", "expected an array");
      int ji = 0;
      for (const auto& jj : joints) {
        const std::string jwhere = where + ".joints[" + std::to_string(ji++) + "]";
        RevoluteJoint joint;
        joint.axis = read_vec3(require(jj, "axis", jwhere), jwhere + ".axis");
        joint.origin = read_vec3(require(jj, "origin", jwhere), jwhere + ".origin");
        chain.joints.push_back(joint);
      }
      const json& links = require(jk, "links", where);
      if (!links.is_array()) fail(where + ".links", "expected an array");
      int li = 0;
      for (const auto& jl : links) {
        const std::string lwhere = where + ".links[" + std::to_string(li++) + "]";
        ChainLink link;
        link.name = require(jl, "name", lwhere).get<std::string>();
        const json& count = require(jl, "joints", lwhere);
        if (!count.is_number_integer()) fail(lwhere + ".joints", "expected an integer");
        link.joint_count = count.get<int>();
        chain.links.push_back(std::move(link));
      }
      scene.chains.push_back(std::move(chain));
    }
  }

  const json& act = require(root, "actuation", "document");
  const std::string mode = require(act, "mode", "actuation").get<std::string>();
  if (mode == "direct") {
    DirectActuation direct;
    const json& tau = require(act, "tau_c", "actuation");
    if (!tau.is_array()) fail("actuation.tau_c", "expected an array");
    direct.tau_c = VecX::Zero(static_cast<int>(tau.size()));
    for (int i = 0; i < direct.tau_c.size(); ++i) {
      if (!tau[i].is_number()) fail("actuation.tau_c", "expected numbers");
      direct.tau_c[i] = tau[i].get<double>();
    }
    scene.actuation = std::move(direct);
  } else if (mode == "tendon") {
    TendonActuation tendon;
    const json& rows = require(act, "R", "actuation");
    if (!rows.is_array() || rows.empty()) fail("actuation.R", "expected a non-empty matrix");
    const int cols = static_cast<int>(rows[0].size());
    tendon.R = MatX::Zero(static_cast<int>(rows.size()), cols);
    for (int r = 0; r < tendon.R.rows(); ++r) {
      if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != cols)
        fail("actuation.R", "ragged matrix");
      for (int c = 0; c < cols; ++c) {
        if (!rows[r][c].is_number()) fail("actuation.R", "expected numbers");
        tendon.R(r, c) = rows[r][c].get<double>();
      }
    }
    const json& fc = require(act, "f_c", "actuation");
    if (!fc.is_array()) fail("actuation.f_c", "expected an array");
    tendon.f_c = VecX::Zero(static_cast<int>(fc.size()));
    for (int i = 0; i < tendon.f_c.size(); ++i) {
      if (!fc[i].is_number()) fail("actuation.f_c", "expected numbers");
      tendon.f_c[i] = fc[i].get<double>();
    }
    scene.actuation = std::move(tendon);
  } else {
    fail("actuation.mode", "expected 'direct' or 'tendon', got '" + mode + "'");
  }

  validate_scene(scene);
  return scene;
}

void validate_scene(const GraspScene& scene) {
  auto invalid = [](const std::string& what) {
    throw SceneError("validation error: " + what);
  };

  if (!(scene.characteristic_length > 0.0))
    invalid("object.characteristic_length must be > 0");
  if (scene.contacts.empty()) invalid("scene needs at least one contact");

  std::set<std::string> link_names;
  int chain_index = 0;
  for (const auto& chain : scene.chains) {
    const std::string cname = "chains[" + std::to_string(chain_index++) + "]";
    int joint_index = 0;
    for (const auto& joint : chain.joints) {
      if (std::abs(joint.axis.norm() - 1.0) > kUnitTol)
        invalid(cname + ".joints[" + std::to_string(joint_index) + "]: axis not unit (norm=" +
                std::to_string(joint.axis.norm()) + ")");
      ++joint_index;
    }
    for (const auto& link : chain.links) {
      if (link.name == kPalmLink) invalid(cname + ": link name 'palm' is reserved");
      if (link.joint_count < 0 || link.joint_count > static_cast<int>(chain.joints.size()))
        invalid(cname + ": link '" + link.name + "' references " +
                std::to_string(link.joint_count) + " joints, chain has " +
                std::to_string(chain.joints.size()));
      if (!link_names.insert(link.name).second)
        invalid("duplicate link name '" + link.name + "'");
    }
  }

  std::set<std::string> contact_ids;
  for (const auto& contact : scene.contacts) {
    const std::string cname = "contact '" + contact.id + "'";
    if (!contact_ids.insert(contact.id).second) invalid("duplicate contact id '" + contact.id + "'");
    if (std::abs(contact.normal.norm() - 1.0) > kUnitTol)
      invalid(cname + ": normal not unit (norm=" + std::to_string(contact.normal.norm()) + ")");
    if (contact.mu < 0.0) invalid(cname + ": mu must be >= 0");
    if (contact.edge_count < 3) invalid(cname + ": edge_count must be >= 3");
    if (contact.link != kPalmLink && link_names.count(contact.link) == 0)
      invalid(cname + ": link '" + contact.link + "' is not declared");
  }

  const int d = scene.joint_count();
  if (const auto* direct = std::get_if<DirectActuation>(&scene.actuation)) {
    if (direct->tau_c.size() != d)
      invalid("actuation.tau_c has " + std::to_string(direct->tau_c.size()) +
              " entries, scene has " + std::to_string(d) + " joints");
    for (int i = 0; i < direct->tau_c.size(); ++i)
      if (direct->tau_c[i] < 0.0)
        invalid("actuation.tau_c[" + std::to_string(i) + "] must be >= 0");
  } else {
    const auto& tendon = std::get<TendonActuation>(scene.actuation);
    if (tendon.R.rows() != d)
      invalid("actuation.R has " + std::to_string(tendon.R.rows()) +
              " rows, scene has " + std::to_string(d) + " joints");
    if (tendon.R.cols() < 1) invalid("actuation.R needs at least one actuator");
    if (tendon.f_c.size() != tendon.R.cols())
      invalid("actuation.f_c has " + std::to_string(tendon.f_c.size()) +
              " entries, R has " + std::to_string(tendon.R.cols()) + " columns");
    if (!tendon.R.allFinite()) invalid("actuation.R entries must be finite");
    for (int i = 0; i < tendon.f_c.size(); ++i)
      if (tendon.f_c[i] < 0.0)
        invalid("actuation.f_c[" + std::to_string(i) + "] must be >= 0");
    Eigen::ColPivHouseholderQR<MatX> qr(tendon.R);
    qr.setThreshold(1e-12);
    if (qr.rank() < tendon.R.cols())
      invalid("actuation.R is column rank deficient (an actuator affects no joint)");
  }
}

}  // namespace grasp
