import { StateMessage } from "../src/protocol";

export function stateMessage(overrides: Partial<StateMessage> = {}): StateMessage {
  return {
    type: "state",
    t_s: 1.0,
    phase: "test_horizontal1D",
    cursor: [0.1, 0.0],
    target: { direction: "RT", center: [0.85, 0.0], radius: 0.15 },
    decoded: [0.3, 0.01],
    robot: { gesture: "RIGHT_HAND", eye_rgb: [0, 255, 0] },
    trial: { index: 1, elapsed_s: 0.5, hits: 0, completed: 0, total: 4 },
    ...overrides,
  };
}
