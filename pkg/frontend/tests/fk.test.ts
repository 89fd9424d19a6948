/** Client-side FK must agree with the exported fixture corpus to 1e-6. */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { actuatedCount, ChainDescription, forwardKinematics, linkSegments } from "../src/chain.js";

interface FkSample {
  q: number[];
  poses: Record<string, number[]>;
}

interface FkFixture {
  chain: ChainDescription;
  samples: FkSample[];
}

const FIXTURE_DIR = new URL("../../fixtures/fk/", import.meta.url);
const FIXTURES = ["arm6", "finger1", "finger2", "hand_two_finger", "planar2", "spatial3"];
const TOL = 1e-6;

function loadFixture(name: string): FkFixture {
  return JSON.parse(readFileSync(new URL(`${name}.json`, FIXTURE_DIR), "utf-8"));
}

/** q and -q describe the same rotation, so compare up to sign. */
function quatGap(a: number[], b: number[]): number {
  let direct = 0;
  let flipped = 0;
  for (let i = 0; i < 4; i++) {
    direct = Math.max(direct, Math.abs(a[i] - b[i]));
    flipped = Math.max(flipped, Math.abs(a[i] + b[i]));
  }
  return Math.min(direct, flipped);
}

describe("client-side forward kinematics", () => {
  for (const name of FIXTURES) {
    it(`matches every ${name} fixture sample within 1e-6`, () => {
      const { chain, samples } = loadFixture(name);
      expect(samples.length).toBeGreaterThan(0);
      for (const sample of samples) {
        const poses = forwardKinematics(chain, sample.q);
        for (const [link, want] of Object.entries(sample.poses)) {
          const got = poses[link];
          expect(got, `${name}: missing link ${link}`).toBeDefined();
          for (let i = 0; i < 3; i++) {
            expect(Math.abs(got![i] - want[i]), `${name}/${link} position[${i}]`).toBeLessThan(TOL);
          }
          expect(quatGap(got!.slice(3), want.slice(3)), `${name}/${link} orientation`).toBeLessThan(TOL);
        }
      }
    });
  }

  it("puts the planar tip at (2, 0) in the zero configuration", () => {
    const { chain } = loadFixture("planar2");
    const zeros = new Array(actuatedCount(chain)).fill(0);
    const tip = forwardKinematics(chain, zeros)["tip"];
    expect(tip).toBeDefined();
    expect(tip![0]).toBeCloseTo(2, 9);
    expect(tip![1]).toBeCloseTo(0, 9);
    expect(tip![2]).toBeCloseTo(0, 9);
  });

  it("rejects joint vectors of the wrong length", () => {
    const { chain } = loadFixture("planar2");
    expect(() => forwardKinematics(chain, [0])).toThrow(/joint values/);
    expect(() => forwardKinematics(chain, [0, 0, 0])).toThrow(/joint values/);
  });

  it("yields one drawable segment per joint", () => {
    const { chain, samples } = loadFixture("arm6");
    const poses = forwardKinematics(chain, samples[0].q);
    expect(linkSegments(chain, poses)).toHaveLength(chain.joints.length);
  });

  it("parses fixtures as strict JSON (no Infinity literals survive export)", () => {
    for (const name of FIXTURES) {
      const { chain } = loadFixture(name);
      for (const joint of chain.joints) {
        for (const bound of joint.limits) {
          expect(bound === null || Number.isFinite(bound)).toBe(true);
        }
        expect(joint.velocity_limit === null || Number.isFinite(joint.velocity_limit)).toBe(true);
      }
    }
  });
});
