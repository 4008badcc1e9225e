// Just enough 3-D vector algebra to synthesize head orientation and to
// check where a gaze ray meets the table.

export type Vec3 = [number, number, number];
export type Mat3 = number[]; // row-major, 9 entries

export const TILT_RAD = (30 * Math.PI) / 180;

// gaze direction of an identity-oriented head: x tilted 30 degrees down
export const TILT_BASE: Vec3 = [Math.cos(TILT_RAD), 0, -Math.sin(TILT_RAD)];

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function apply(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0]! * v[0] + m[1]! * v[1] + m[2]! * v[2],
    m[3]! * v[0] + m[4]! * v[1] + m[5]! * v[2],
    m[6]! * v[0] + m[7]! * v[1] + m[8]! * v[2],
  ];
}

export function rotationAbout(axis: Vec3, angle: number): Mat3 {
  const [kx, ky, kz] = normalize(axis);
  const s = Math.sin(angle);
  const c = 1 - Math.cos(angle);
  // I + sin(a) K + (1 - cos(a)) K^2 for the skew matrix K of the axis
  return [
    1 + c * (-kz * kz - ky * ky), -s * kz + c * kx * ky, s * ky + c * kx * kz,
    s * kz + c * kx * ky, 1 + c * (-kz * kz - kx * kx), -s * kx + c * ky * kz,
    -s * ky + c * kx * kz, s * kx + c * ky * kz, 1 + c * (-ky * ky - kx * kx),
  ];
}

/** Smallest rotation taking unit vector src onto unit vector dst. */
export function rotationAligning(src: Vec3, dst: Vec3): Mat3 {
  const s = normalize(src);
  const d = normalize(dst);
  const c = dot(s, d);
  const axis = cross(s, d);
  const n = norm(axis);
  if (n < 1e-12) {
    if (c > 0) return [1, 0, 0, 0, 1, 0, 0, 0, 1];
    // antiparallel: half-turn about any perpendicular axis
    const perp: Vec3 = Math.abs(s[0]) > 0.9 ? [0, 1, 0] : [1, 0, 0];
    return rotationAbout(cross(s, perp), Math.PI);
  }
  return rotationAbout(axis, Math.atan2(n, c));
}

/** (x, y) where the ray from head along gaze crosses the z = 0 table. */
export function gazeTableHit(head: Vec3, gaze: Vec3): [number, number] | null {
  if (Math.abs(gaze[2]) <= 1e-9) return null;
  const s = -head[2] / gaze[2];
  if (s <= 0) return null;
  return [head[0] + s * gaze[0], head[1] + s * gaze[1]];
}
