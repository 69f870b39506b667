// Console wiring: one session at a time, one event-stream connection.

import { ConsoleApi } from "./api.js";
import { renderCharts } from "./charts.js";
import { TeleopKeypad, type TeleopKey } from "./keypad.js";
import type { Candidate, ConsoleEvent, Modality } from "./types.js";
import {
  renderContextCards,
  renderMap,
  renderPublishedLog,
  renderReceivedLog,
  renderRobotPicker,
  renderStatusBadges,
  renderSuggestionBanner,
} from "./views.js";

const ARENA = { x: [-5, 5] as [number, number], y: [-5, 5] as [number, number] };

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing element #${id}`);
  return element as T;
}

interface ConsoleState {
  sessionId: string | null;
  selected: Candidate | null;
  modality: Modality | null;
  statuses: string[];
  robotStates: Map<string, import("./types.js").RobotStateWire>;
}

async function boot(): Promise<void> {
  const api = new ConsoleApi("");
  const state: ConsoleState = {
    sessionId: null,
    selected: null,
    modality: null,
    statuses: [],
    robotStates: new Map(),
  };

  const keywordInput = byId<HTMLInputElement>("keyword-input");
  const keywordSubmit = byId<HTMLButtonElement>("keyword-submit");
  const intentLabel = byId<HTMLElement>("intent-label");
  const cards = byId<HTMLElement>("context-cards");
  const banner = byId<HTMLElement>("suggestion-banner");
  const modalitySelect = byId<HTMLSelectElement>("modality-select");
  const keypadContainer = byId<HTMLElement>("teleop-keypad");
  const transcriptField = byId<HTMLInputElement>("voice-transcript");
  const customField = byId<HTMLInputElement>("custom-command");
  const commentField = byId<HTMLInputElement>("comment-field");
  const robotPicker = byId<HTMLSelectElement>("robot-picker");
  const dispatchButton = byId<HTMLButtonElement>("dispatch-button");
  const badges = byId<HTMLElement>("status-badges");
  const mapSvg = byId<HTMLElement>("robot-map") as unknown as SVGElement;
  const charts = byId<HTMLElement>("charts");
  const publishedPane = byId<HTMLElement>("published-log");
  const receivedPane = byId<HTMLElement>("received-log");
  const showPublished = byId<HTMLButtonElement>("show-published");
  const showReceived = byId<HTMLButtonElement>("show-received");

  const dispatchTeleop = async (key: TeleopKey) => {
    if (!state.sessionId) return;
    const request = {
      robot_id: robotPicker.value,
      modality: "Teleop" as Modality,
      teleop_key: key,
      ...(state.selected
        ? { candidate_index: state.selected.index }
        : { custom_text: customField.value || "teleop" }),
      ...(commentField.value ? { comment: commentField.value } : {}),
    };
    const result = await api.dispatch(state.sessionId, request);
    renderSuggestionBanner(banner, result.suggestion);
  };
  const keypad = new TeleopKeypad(keypadContainer, (key) => void dispatchTeleop(key));
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) {
      // "V" in the transcript field sends the voice command
      if (event.target === transcriptField && event.key.toUpperCase() === "V" && event.ctrlKey) {
        void dispatchVoice();
      }
      return;
    }
    keypad.handleKeydown(event);
    if (event.key.toUpperCase() === "V" && state.modality === "Voice") {
      void dispatchVoice();
    }
  });

  async function dispatchVoice(): Promise<void> {
    if (!state.sessionId) return;
    const result = await api.dispatch(state.sessionId, {
      robot_id: robotPicker.value,
      modality: "Voice",
      transcript: transcriptField.value || customField.value,
      ...(commentField.value ? { comment: commentField.value } : {}),
    });
    renderSuggestionBanner(banner, result.suggestion);
  }

  keywordSubmit.addEventListener("click", () => {
    void (async () => {
      if (!state.sessionId) state.sessionId = await api.createSession();
      const response = await api.submitKeywords(state.sessionId, keywordInput.value);
      intentLabel.textContent = response.intent;
      renderContextCards(cards, response.candidates, (candidate) => {
        state.selected = candidate;
        state.modality = candidate.suggested_modality;
        modalitySelect.value = candidate.suggested_modality;
        keypad.setEnabled(candidate.suggested_modality === "Teleop");
        renderSuggestionBanner(banner, { suggested: candidate.suggested_modality });
      });
      state.selected = null;
      renderStatusBadges(badges, []);
    })();
  });

  modalitySelect.addEventListener("change", () => {
    state.modality = modalitySelect.value as Modality;
    keypad.setEnabled(state.modality === "Teleop");
  });

  dispatchButton.addEventListener("click", () => {
    void (async () => {
      if (!state.sessionId) return;
      const modality = (modalitySelect.value || undefined) as Modality | undefined;
      if (modality === "Teleop") return; // teleop goes through the keypad
      if (modality === "Voice" && transcriptField.value) return void dispatchVoice();
      const result = await api.dispatch(state.sessionId, {
        robot_id: robotPicker.value,
        ...(customField.value
          ? { custom_text: customField.value }
          : { candidate_index: state.selected?.index }),
        ...(modality ? { modality } : {}),
        ...(commentField.value ? { comment: commentField.value } : {}),
      });
      renderSuggestionBanner(banner, result.suggestion);
      state.statuses = [];
      renderStatusBadges(badges, state.statuses);
    })();
  });

  showPublished.addEventListener("click", () => {
    void api.publishedLog().then((log) => {
      renderPublishedLog(publishedPane, log.published);
      publishedPane.hidden = false;
      receivedPane.hidden = true;
    });
  });
  showReceived.addEventListener("click", () => {
    void api.receivedLog().then((log) => {
      renderReceivedLog(receivedPane, log.received);
      receivedPane.hidden = false;
      publishedPane.hidden = true;
    });
  });

  const robots = await api.robots();
  for (const robot of robots.robots) state.robotStates.set(robot.robot_id, robot);
  renderRobotPicker(robotPicker, robots.robots);
  renderMap(mapSvg, [...state.robotStates.values()], ARENA);
  renderCharts(charts, await api.analytics());

  api.connectEvents((event: ConsoleEvent) => {
    if (event.type === "feedback") {
      state.statuses = [...state.statuses, event.status];
      renderStatusBadges(badges, state.statuses);
      state.robotStates.set(event.state.robot_id, event.state);
      renderMap(mapSvg, [...state.robotStates.values()], ARENA);
    } else if (event.type === "robot_state") {
      state.robotStates.set(event.state.robot_id, event.state);
      renderMap(mapSvg, [...state.robotStates.values()], ARENA);
      renderRobotPicker(robotPicker, [...state.robotStates.values()]);
    } else if (event.type === "analytics") {
      renderCharts(charts, event.snapshot);
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("console-root")) {
  void boot();
}
