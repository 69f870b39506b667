// Teleop keypad: nine keys, one dispatch per press, key attached verbatim.

export const TELEOP_KEYS = ["P", "F", "B", "L", "R", "W", "A", "S", "D"] as const;
export type TeleopKey = (typeof TELEOP_KEYS)[number];

export type KeyDispatcher = (key: TeleopKey) => void;

export function isTeleopKey(value: string): value is TeleopKey {
  return (TELEOP_KEYS as readonly string[]).includes(value.toUpperCase());
}

export class TeleopKeypad {
  enabled = false;

  constructor(
    private readonly container: HTMLElement,
    private readonly dispatch: KeyDispatcher,
  ) {
    for (const key of TELEOP_KEYS) {
      const button = document.createElement("button");
      button.className = "keypad-key";
      button.dataset.key = key;
      button.textContent = key;
      button.addEventListener("click", () => this.press(key));
      container.appendChild(button);
    }
  }

  press(key: TeleopKey): void {
    if (!this.enabled) return;
    this.dispatch(key);
  }

  handleKeydown(event: Pick<KeyboardEvent, "key" | "repeat">): void {
    if (!this.enabled || event.repeat) return;
    const key = event.key.toUpperCase();
    if (isTeleopKey(key)) this.press(key as TeleopKey);
  }

  setEnabled(enabled: boolean): void {
    this.enabled = enabled;
    this.container.classList.toggle("keypad-enabled", enabled);
  }
}
