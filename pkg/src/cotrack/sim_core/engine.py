"""Sequential-impulse dynamics step for the planar world.

Semi-implicit Euler integration, PD joint actuation clamped to torque
limits, revolute joints and contacts resolved by iterative impulses
(10 velocity iterations), followed by direct position correction
(4 iterations, no Baumgarte velocity bias). Scalar Python arithmetic in a
fixed order keeps runs bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import Box, Circle
from .world import SimState, WorldModel

VELOCITY_ITERS = 10
POSITION_ITERS = 4
SLOP = 1e-3
POS_CORRECTION = 0.8
MAX_CORRECTION = 0.2
RESTITUTION_VEL_THRESHOLD = 0.2

GROUND = -1  # pseudo body id for the z=0 half plane


@dataclass
class Contact:
    body_a: str
    body_b: str
    point: tuple[float, float]
    normal: tuple[float, float]  # unit, from a to b
    force: float  # normal impulse / dt, N
    tangent_force: float


@dataclass
class ContactReport:
    contacts: list[Contact]


def eef_contact_force(report: ContactReport, world: WorldModel,
                      eef_id: str, object_body: str) -> float:
    """Total normal-force magnitude between one end-effector and the object."""

    if eef_id not in world.robot.eef_bodies:
        raise KeyError(f"{eef_id!r} is not a designated end-effector")
    total = 0.0
    for c in report.contacts:
        pair = {c.body_a, c.body_b}
        if pair == {eef_id, object_body}:
            total += c.force
    return total


def _corners(x, z, th, hx, hz):
    c, s = math.cos(th), math.sin(th)
    out = []
    for lx, lz in ((hx, hz), (-hx, hz), (-hx, -hz), (hx, -hz)):
        out.append((x + c * lx - s * lz, z + s * lx + c * lz))
    return out


def _detect(world: WorldModel, x, z, th):
    """Contact manifold as raw tuples (ia, ib, px, pz, nx, nz, pen)."""

    found = []
    nb = len(world.bodies)
    robot_ids = set(world.robot_body_ids)
    ob = world.object_body
    obj_fixed = (world.object_model is not None
                 and world.object_model.kind == "fixed")

    # body vs ground
    for i in range(nb):
        if i == ob and obj_fixed:
            continue
        shape = world.bodies[i].shape
        if isinstance(shape, Circle):
            pen = shape.radius - z[i]
            if pen > 0:
                found.append((GROUND, i, x[i], z[i] - shape.radius,
                              0.0, 1.0, pen))
        else:
            hx, hz = shape.half_extents
            for cx, cz in _corners(x[i], z[i], th[i], hx, hz):
                if cz < 0:
                    found.append((GROUND, i, cx, cz, 0.0, 1.0, -cz))

    # robot bodies vs object body
    if ob is not None:
        for i in sorted(robot_ids):
            found.extend(_collide_pair(world, i, ob, x, z, th))
    return found


def _collide_pair(world, ia, ib, x, z, th):
    sa = world.bodies[ia].shape
    sb = world.bodies[ib].shape
    if isinstance(sa, Circle) and isinstance(sb, Circle):
        return _circle_circle(ia, ib, x, z, sa.radius, sb.radius)
    if isinstance(sa, Circle) and isinstance(sb, Box):
        return _circle_box(ia, ib, x, z, th, sa.radius, sb.half_extents)
    if isinstance(sa, Box) and isinstance(sb, Circle):
        flipped = _circle_box(ib, ia, x, z, th, sb.radius, sa.half_extents)
        return [(ia, ib, px, pz, -nx, -nz, pen)
                for (_, _, px, pz, nx, nz, pen) in flipped]
    return _box_box(ia, ib, x, z, th, sa.half_extents, sb.half_extents)


def _circle_circle(ia, ib, x, z, ra, rb):
    dx = x[ib] - x[ia]
    dz = z[ib] - z[ia]
    dist = math.sqrt(dx * dx + dz * dz)
    pen = ra + rb - dist
    if pen <= 0:
        return []
    if dist > 1e-12:
        nx, nz = dx / dist, dz / dist
    else:
        nx, nz = 0.0, 1.0
    px = x[ia] + nx * (ra - 0.5 * pen)
    pz = z[ia] + nz * (ra - 0.5 * pen)
    return [(ia, ib, px, pz, nx, nz, pen)]


def _circle_box(ic, ib, x, z, th, r, half):
    """Circle ic against box ib; normal points from circle to box."""

    hx, hz = half
    c, s = math.cos(th[ib]), math.sin(th[ib])
    # circle center in box local frame
    dx = x[ic] - x[ib]
    dz = z[ic] - z[ib]
    lx = c * dx + s * dz
    lz = -s * dx + c * dz
    qx = max(-hx, min(hx, lx))
    qz = max(-hz, min(hz, lz))
    if qx == lx and qz == lz:
        # center inside the box: push out through the nearest face
        dxs = (hx - lx, lx + hx, hz - lz, lz + hz)
        k = dxs.index(min(dxs))
        if k == 0:
            qx, nlx, nlz = hx, -1.0, 0.0
        elif k == 1:
            qx, nlx, nlz = -hx, 1.0, 0.0
        elif k == 2:
            qz, nlx, nlz = hz, 0.0, -1.0
        else:
            qz, nlx, nlz = -hz, 0.0, 1.0
        pen = r + min(dxs)
    else:
        ddx = lx - qx
        ddz = lz - qz
        dist = math.sqrt(ddx * ddx + ddz * ddz)
        pen = r - dist
        if pen <= 0:
            return []
        nlx, nlz = -ddx / dist, -ddz / dist
    nx = c * nlx - s * nlz
    nz = s * nlx + c * nlz
    px = x[ib] + c * qx - s * qz
    pz = z[ib] + s * qx + c * qz
    return [(ic, ib, px, pz, nx, nz, pen)]


def _box_box(ia, ib, x, z, th, half_a, half_b):
    """Approximate manifold: vertices of each box tested inside the other."""

    out = []
    out.extend(_verts_in_box(ia, ib, x, z, th, half_a, half_b, flip=False))
    out.extend(_verts_in_box(ib, ia, x, z, th, half_b, half_a, flip=True))
    return out


def _verts_in_box(iv, ib, x, z, th, half_v, half_b, flip):
    hx, hz = half_b
    c, s = math.cos(th[ib]), math.sin(th[ib])
    out = []
    for vxw, vzw in _corners(x[iv], z[iv], th[iv], *half_v):
        dx = vxw - x[ib]
        dz = vzw - z[ib]
        lx = c * dx + s * dz
        lz = -s * dx + c * dz
        if abs(lx) >= hx or abs(lz) >= hz:
            continue
        dxs = (hx - lx, lx + hx, hz - lz, lz + hz)
        pen = min(dxs)
        k = dxs.index(pen)
        nl = ((-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0))[k]
        nx = c * nl[0] - s * nl[1]
        nz = s * nl[0] + c * nl[1]
        if flip:
            # normal must point from a (=ib here) to b (=iv)
            out.append((ib, iv, vxw, vzw, -nx, -nz, pen))
        else:
            out.append((iv, ib, vxw, vzw, nx, nz, pen))
    return out


def step(world: WorldModel, state: SimState, joint_targets, dt: float):
    """Advance one physics step; returns (new SimState, ContactReport)."""

    nj = world.n_joints
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if len(joint_targets) != nj:
        raise ValueError(f"expected {nj} joint targets, got {len(joint_targets)}")
    targets = [float(t) for t in joint_targets]
    if any(math.isnan(t) or math.isinf(t) for t in targets):
        raise ValueError("joint_targets contain non-finite values")
    for arr in (state.x, state.z, state.theta, state.vx, state.vz, state.omega):
        if not np.all(np.isfinite(arr)):
            raise ValueError("state contains non-finite values")

    nb = len(world.bodies)
    x = [float(v) for v in state.x]
    z = [float(v) for v in state.z]
    th = [float(v) for v in state.theta]
    vx = [float(v) for v in state.vx]
    vz = [float(v) for v in state.vz]
    om = [float(v) for v in state.omega]

    inv_m = []
    inv_i = []
    obj_static = (world.object_model is not None
                  and world.object_model.kind == "fixed")
    for i, b in enumerate(world.bodies):
        static = i == world.object_body and obj_static
        inv_m.append(0.0 if static else 1.0 / b.mass)
        inv_i.append(0.0 if static else 1.0 / b.inertia)

    # --- PD torques, clamped ---
    torque = [0.0] * nb
    applied = [0.0] * nj
    for k, j in enumerate(world.joints):
        q = th[j.child] - th[j.parent]
        qd = om[j.child] - om[j.parent]
        tau = j.kp * (targets[k] - q) - j.kd * qd
        tau = max(-j.torque_limit, min(j.torque_limit, tau))
        applied[k] = tau
        torque[j.child] += tau
        torque[j.parent] -= tau

    # --- integrate velocities ---
    g = world.gravity
    for i in range(nb):
        if inv_m[i] > 0.0:
            vz[i] += dt * g
            om[i] += dt * inv_i[i] * torque[i]

    # --- contact detection at current positions ---
    raw = _detect(world, x, z, th)
    contacts = []
    for (ia, ib, px, pz, nx, nz, pen) in raw:
        mu_a = world.ground_friction if ia == GROUND else world.bodies[ia].friction_coeff
        mu = math.sqrt(mu_a * world.bodies[ib].friction_coeff)
        e_a = 0.0 if ia == GROUND else world.bodies[ia].restitution
        e = max(e_a, world.bodies[ib].restitution)
        vn0 = _rel_normal_vel(ia, ib, px, pz, nx, nz, x, z, vx, vz, om)
        bias = -e * vn0 if vn0 < -RESTITUTION_VEL_THRESHOLD else 0.0
        contacts.append({
            "ia": ia, "ib": ib, "px": px, "pz": pz,
            "nx": nx, "nz": nz, "mu": mu, "bias": bias,
            "acc_n": 0.0, "acc_t": 0.0,
        })

    # hinged-object anchor constraint data
    hinge = None
    if (world.object_model is not None
            and world.object_model.kind == "hinged"):
        hinge = world.object_model.hinge

    # --- velocity iterations ---
    for _ in range(VELOCITY_ITERS):
        for j in world.joints:
            _solve_joint_velocity(j, x, z, th, vx, vz, om, inv_m, inv_i)
        for k, j in enumerate(world.joints):
            _solve_limit_velocity(j.parent, j.child, j.limits,
                                  th, om, inv_i)
        if hinge is not None:
            _solve_hinge_velocity(world, hinge, x, z, th, vx, vz, om,
                                  inv_m, inv_i)
            ob = world.object_body
            lo, hi = hinge.axis_limits
            _solve_world_limit_velocity(ob, hinge.rest_ori, lo, hi, th, om, inv_i)
        for c in contacts:
            _solve_contact_velocity(c, x, z, vx, vz, om, inv_m, inv_i)

    # --- integrate positions ---
    for i in range(nb):
        x[i] += vx[i] * dt
        z[i] += vz[i] * dt
        th[i] += om[i] * dt

    # --- position correction ---
    for _ in range(POSITION_ITERS):
        for j in world.joints:
            _correct_joint_position(j, x, z, th, inv_m, inv_i)
        for j in world.joints:
            _correct_limit_position(j.parent, j.child, j.limits, th, inv_i)
        if hinge is not None:
            _correct_hinge_position(world, hinge, x, z, th, inv_m, inv_i)
            lo, hi = hinge.axis_limits
            _correct_world_limit_position(world.object_body, hinge.rest_ori,
                                          lo, hi, th, inv_i)
        fresh = _detect(world, x, z, th)
        for (ia, ib, px, pz, nx, nz, pen) in fresh:
            _correct_contact_position(ia, ib, px, pz, nx, nz, pen,
                                      x, z, th, inv_m, inv_i)

    # hard projection keeps joint angles inside limits (rotation about the
    # joint anchor preserves that joint's anchor coincidence)
    for j in world.joints:
        _project_limit(j, x, z, th)

    # --- write back ---
    new = state.copy()
    new.x = np.array(x)
    new.z = np.array(z)
    new.theta = np.array(th)
    new.vx = np.array(vx)
    new.vz = np.array(vz)
    new.omega = np.array(om)
    jp = np.zeros(nj)
    jv = np.zeros(nj)
    for k, j in enumerate(world.joints):
        jp[k] = th[j.child] - th[j.parent]
        jv[k] = om[j.child] - om[j.parent]
    new.joint_pos = jp
    new.joint_vel = jv
    new.applied_torque = np.array(applied)
    new.time = state.time + dt
    new.step_count = state.step_count + 1

    names = [b.name for b in world.bodies]
    report = ContactReport(contacts=[
        Contact(
            body_a="ground" if c["ia"] == GROUND else names[c["ia"]],
            body_b=names[c["ib"]],
            point=(c["px"], c["pz"]),
            normal=(c["nx"], c["nz"]),
            force=c["acc_n"] / dt,
            tangent_force=c["acc_t"] / dt,
        )
        for c in contacts
    ])
    return new, report


def _rel_normal_vel(ia, ib, px, pz, nx, nz, x, z, vx, vz, om):
    if ia == GROUND:
        vax = vaz = 0.0
    else:
        vax = vx[ia] - om[ia] * (pz - z[ia])
        vaz = vz[ia] + om[ia] * (px - x[ia])
    vbx = vx[ib] - om[ib] * (pz - z[ib])
    vbz = vz[ib] + om[ib] * (px - x[ib])
    return (vbx - vax) * nx + (vbz - vaz) * nz


def _solve_contact_velocity(c, x, z, vx, vz, om, inv_m, inv_i):
    ia, ib = c["ia"], c["ib"]
    px, pz, nx, nz = c["px"], c["pz"], c["nx"], c["nz"]

    if ia == GROUND:
        im_a = ii_a = 0.0
        rax = raz = 0.0
    else:
        im_a, ii_a = inv_m[ia], inv_i[ia]
        rax, raz = px - x[ia], pz - z[ia]
    im_b, ii_b = inv_m[ib], inv_i[ib]
    rbx, rbz = px - x[ib], pz - z[ib]

    # normal
    rn_a = rax * nz - raz * nx
    rn_b = rbx * nz - rbz * nx
    kn = im_a + im_b + ii_a * rn_a * rn_a + ii_b * rn_b * rn_b
    if kn > 0.0:
        vn = _rel_normal_vel(ia, ib, px, pz, nx, nz, x, z, vx, vz, om)
        lam = -(vn - c["bias"]) / kn
        new_acc = max(0.0, c["acc_n"] + lam)
        dl = new_acc - c["acc_n"]
        c["acc_n"] = new_acc
        _apply_impulse(ia, ib, dl * nx, dl * nz, rax, raz, rbx, rbz,
                       vx, vz, om, im_a, ii_a, im_b, ii_b)

    # friction along the tangent
    tx, tz = -nz, nx
    rt_a = rax * tz - raz * tx
    rt_b = rbx * tz - rbz * tx
    kt = im_a + im_b + ii_a * rt_a * rt_a + ii_b * rt_b * rt_b
    if kt > 0.0:
        vt = _rel_normal_vel(ia, ib, px, pz, tx, tz, x, z, vx, vz, om)
        lam = -vt / kt
        max_f = c["mu"] * c["acc_n"]
        new_acc = max(-max_f, min(max_f, c["acc_t"] + lam))
        dl = new_acc - c["acc_t"]
        c["acc_t"] = new_acc
        _apply_impulse(ia, ib, dl * tx, dl * tz, rax, raz, rbx, rbz,
                       vx, vz, om, im_a, ii_a, im_b, ii_b)


def _apply_impulse(ia, ib, jx, jz, rax, raz, rbx, rbz,
                   vx, vz, om, im_a, ii_a, im_b, ii_b):
    if ia != GROUND:
        vx[ia] -= im_a * jx
        vz[ia] -= im_a * jz
        om[ia] -= ii_a * (rax * jz - raz * jx)
    vx[ib] += im_b * jx
    vz[ib] += im_b * jz
    om[ib] += ii_b * (rbx * jz - rbz * jx)


def _anchor_world(x, z, th, i, local):
    c, s = math.cos(th[i]), math.sin(th[i])
    return (x[i] + c * local[0] - s * local[1],
            z[i] + s * local[0] + c * local[1])


def _solve_point_velocity(ia, ib, ax, az, bx, bz, x, z, vx, vz, om,
                          im_a, ii_a, im_b, ii_b):
    """Drive the relative velocity of two attached points to zero."""

    rax, raz = ax - x[ia], az - z[ia]
    rbx, rbz = bx - x[ib], bz - z[ib]
    vax = vx[ia] - om[ia] * raz
    vaz = vz[ia] + om[ia] * rax
    vbx = vx[ib] - om[ib] * rbz
    vbz = vz[ib] + om[ib] * rbx
    cx = vbx - vax
    cz = vbz - vaz
    k11 = im_a + im_b + ii_a * raz * raz + ii_b * rbz * rbz
    k12 = -ii_a * rax * raz - ii_b * rbx * rbz
    k22 = im_a + im_b + ii_a * rax * rax + ii_b * rbx * rbx
    det = k11 * k22 - k12 * k12
    if det <= 0.0:
        return
    jx = -(k22 * cx - k12 * cz) / det
    jz = -(k11 * cz - k12 * cx) / det
    vx[ia] -= im_a * jx
    vz[ia] -= im_a * jz
    om[ia] -= ii_a * (rax * jz - raz * jx)
    vx[ib] += im_b * jx
    vz[ib] += im_b * jz
    om[ib] += ii_b * (rbx * jz - rbz * jx)


def _solve_joint_velocity(j, x, z, th, vx, vz, om, inv_m, inv_i):
    ax, az = _anchor_world(x, z, th, j.parent, j.anchor)
    bx, bz = _anchor_world(x, z, th, j.child, j.child_anchor)
    _solve_point_velocity(j.parent, j.child, ax, az, bx, bz, x, z, vx, vz, om,
                          inv_m[j.parent], inv_i[j.parent],
                          inv_m[j.child], inv_i[j.child])


def _solve_hinge_velocity(world, hinge, x, z, th, vx, vz, om, inv_m, inv_i):
    ob = world.object_body
    bx, bz = _anchor_world(x, z, th, ob, hinge.local_anchor)
    rbx, rbz = bx - x[ob], bz - z[ob]
    vbx = vx[ob] - om[ob] * rbz
    vbz = vz[ob] + om[ob] * rbx
    im, ii = inv_m[ob], inv_i[ob]
    k11 = im + ii * rbz * rbz
    k12 = -ii * rbx * rbz
    k22 = im + ii * rbx * rbx
    det = k11 * k22 - k12 * k12
    if det <= 0.0:
        return
    jx = -(k22 * vbx - k12 * vbz) / det
    jz = -(k11 * vbz - k12 * vbx) / det
    vx[ob] += im * jx
    vz[ob] += im * jz
    om[ob] += ii * (rbx * jz - rbz * jx)


def _solve_limit_velocity(ip, ic, limits, th, om, inv_i):
    lo, hi = limits
    q = th[ic] - th[ip]
    qd = om[ic] - om[ip]
    k = inv_i[ip] + inv_i[ic]
    if k <= 0.0:
        return
    if q <= lo and qd < 0.0:
        lam = -qd / k
        om[ip] -= inv_i[ip] * lam
        om[ic] += inv_i[ic] * lam
    elif q >= hi and qd > 0.0:
        lam = -qd / k
        om[ip] -= inv_i[ip] * lam
        om[ic] += inv_i[ic] * lam


def _solve_world_limit_velocity(ib, rest, lo, hi, th, om, inv_i):
    q = th[ib] - rest
    k = inv_i[ib]
    if k <= 0.0:
        return
    if q <= lo and om[ib] < 0.0:
        om[ib] = 0.0
    elif q >= hi and om[ib] > 0.0:
        om[ib] = 0.0


def _correct_point_position(ia, ib, ax, az, bx, bz, x, z, th,
                            im_a, ii_a, im_b, ii_b, beta=1.0):
    rax, raz = ax - x[ia], az - z[ia]
    rbx, rbz = bx - x[ib], bz - z[ib]
    cx = (bx - ax) * beta
    cz = (bz - az) * beta
    k11 = im_a + im_b + ii_a * raz * raz + ii_b * rbz * rbz
    k12 = -ii_a * rax * raz - ii_b * rbx * rbz
    k22 = im_a + im_b + ii_a * rax * rax + ii_b * rbx * rbx
    det = k11 * k22 - k12 * k12
    if det <= 0.0:
        return
    jx = -(k22 * cx - k12 * cz) / det
    jz = -(k11 * cz - k12 * cx) / det
    x[ia] -= im_a * jx
    z[ia] -= im_a * jz
    th[ia] -= ii_a * (rax * jz - raz * jx)
    x[ib] += im_b * jx
    z[ib] += im_b * jz
    th[ib] += ii_b * (rbx * jz - rbz * jx)


def _correct_joint_position(j, x, z, th, inv_m, inv_i):
    ax, az = _anchor_world(x, z, th, j.parent, j.anchor)
    bx, bz = _anchor_world(x, z, th, j.child, j.child_anchor)
    _correct_point_position(j.parent, j.child, ax, az, bx, bz, x, z, th,
                            inv_m[j.parent], inv_i[j.parent],
                            inv_m[j.child], inv_i[j.child])


def _correct_hinge_position(world, hinge, x, z, th, inv_m, inv_i):
    ob = world.object_body
    ax, az = hinge.world_anchor
    bx, bz = _anchor_world(x, z, th, ob, hinge.local_anchor)
    rbx, rbz = bx - x[ob], bz - z[ob]
    im, ii = inv_m[ob], inv_i[ob]
    cx, cz = bx - ax, bz - az
    k11 = im + ii * rbz * rbz
    k12 = -ii * rbx * rbz
    k22 = im + ii * rbx * rbx
    det = k11 * k22 - k12 * k12
    if det <= 0.0:
        return
    jx = -(k22 * cx - k12 * cz) / det
    jz = -(k11 * cz - k12 * cx) / det
    x[ob] += im * jx
    z[ob] += im * jz
    th[ob] += ii * (rbx * jz - rbz * jx)


def _correct_limit_position(ip, ic, limits, th, inv_i, beta=1.0):
    lo, hi = limits
    q = th[ic] - th[ip]
    k = inv_i[ip] + inv_i[ic]
    if k <= 0.0:
        return
    c = 0.0
    if q < lo:
        c = q - lo
    elif q > hi:
        c = q - hi
    if c != 0.0:
        lam = -beta * c / k
        th[ip] -= inv_i[ip] * lam
        th[ic] += inv_i[ic] * lam


def _correct_world_limit_position(ib, rest, lo, hi, th, inv_i):
    if inv_i[ib] <= 0.0:
        return
    q = th[ib] - rest
    if q < lo:
        th[ib] += lo - q
    elif q > hi:
        th[ib] += hi - q


def _correct_contact_position(ia, ib, px, pz, nx, nz, pen,
                              x, z, th, inv_m, inv_i):
    c = pen - SLOP
    if c <= 0.0:
        return
    c = min(MAX_CORRECTION, POS_CORRECTION * c)
    if ia == GROUND:
        im_a = ii_a = 0.0
        rax = raz = 0.0
    else:
        im_a, ii_a = inv_m[ia], inv_i[ia]
        rax, raz = px - x[ia], pz - z[ia]
    im_b, ii_b = inv_m[ib], inv_i[ib]
    rbx, rbz = px - x[ib], pz - z[ib]
    rn_a = rax * nz - raz * nx
    rn_b = rbx * nz - rbz * nx
    kn = im_a + im_b + ii_a * rn_a * rn_a + ii_b * rn_b * rn_b
    if kn <= 0.0:
        return
    lam = c / kn
    if ia != GROUND:
        x[ia] -= im_a * lam * nx
        z[ia] -= im_a * lam * nz
        th[ia] -= ii_a * rn_a * lam
    x[ib] += im_b * lam * nx
    z[ib] += im_b * lam * nz
    th[ib] += ii_b * rn_b * lam


def _project_limit(j, x, z, th, tol=1e-9):
    lo, hi = j.limits
    q = th[j.child] - th[j.parent]
    dq = 0.0
    if q < lo - tol:
        dq = lo - q
    elif q > hi + tol:
        dq = hi - q
    if dq == 0.0:
        return
    ax, az = _anchor_world(x, z, th, j.parent, j.anchor)
    c, s = math.cos(dq), math.sin(dq)
    rx = x[j.child] - ax
    rz = z[j.child] - az
    x[j.child] = ax + c * rx - s * rz
    z[j.child] = az + s * rx + c * rz
    th[j.child] += dq
