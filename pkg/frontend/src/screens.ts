// Screen renderers. The client is a straight projection of the
// server's /next payload: no phase logic, no derived numbers, one
// in-flight mutation at a time.

import { ApiClient } from "./api.js";
import { weightChart } from "./charts.js";
import type {
  AssessmentScreen,
  CheckTestScreen,
  GuidanceView,
  ProfileCard,
  QuestionnaireScreen,
  ReportScreen,
  Screen,
  SessionReport,
  TaskInfo,
  TreatmentScreen,
} from "./types.js";

export interface ScreenContext {
  client: ApiClient;
  sessionId: string;
  refresh: () => Promise<void>;
}

let keyHandler: ((event: KeyboardEvent) => void) | null = null;

function resetKeyboard(): void {
  if (keyHandler) {
    document.removeEventListener("keydown", keyHandler);
    keyHandler = null;
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function errorBanner(root: HTMLElement, message: string): void {
  root.querySelector(".error-banner")?.remove();
  const banner = el("div", "error-banner", message);
  root.prepend(banner);
}

export function renderScreen(screen: Screen, root: HTMLElement, ctx: ScreenContext): void {
  resetKeyboard();
  root.replaceChildren();
  switch (screen.kind) {
    case "assessment":
      renderAssessment(screen, root, ctx);
      return;
    case "treatment":
      renderTreatment(screen, root, ctx);
      return;
    case "checktest":
      renderCheckTest(screen, root, ctx);
      return;
    case "questionnaire":
      renderQuestionnaire(screen, root, ctx);
      return;
    case "report":
      renderReport(screen, root);
      return;
    case "excluded":
      root.appendChild(el("section", "notice excluded-notice",
        `This session has ended: ${screen.reason}. Thank you for taking part.`));
      return;
    case "processing": {
      root.appendChild(el("section", "notice", "Working…"));
      const retry = el("button", "primary", "Refresh");
      retry.addEventListener("click", () => void ctx.refresh());
      root.appendChild(retry);
      return;
    }
  }
}

// --- profile assessment ------------------------------------------------------

export function renderProfileCard(profile: ProfileCard, task: TaskInfo): HTMLElement {
  const card = el("article", "profile-card");
  card.dataset.profileId = profile.profile_id;

  const avatar = el("div", "avatar");
  avatar.dataset.avatar = profile.avatar;
  avatar.textContent = profile.avatar
    .split("-")
    .slice(1)
    .map((part) => (part[0] ?? "?").toUpperCase())
    .join("");
  let hue = 0;
  for (const ch of profile.avatar) hue = (hue * 31 + ch.charCodeAt(0)) % 360;
  avatar.style.background = `hsl(${hue}, 45%, 75%)`;
  card.appendChild(avatar);

  const table = el("table", "attribute-table");
  for (const [name, value] of Object.entries(profile.attributes)) {
    const row = el("tr");
    row.appendChild(el("th", undefined, name.replaceAll("_", " ")));
    row.appendChild(el("td", undefined, String(value)));
    table.appendChild(row);
  }
  card.appendChild(table);

  const buttons = el("div", "decision-buttons");
  const select = el("button", "decision select", `${task.select_label} [1]`);
  select.dataset.decision = "1";
  const reject = el("button", "decision reject", `${task.reject_label} [2]`);
  reject.dataset.decision = "0";
  buttons.append(select, reject);
  card.appendChild(buttons);
  return card;
}

interface AssessmentInput {
  task: TaskInfo;
  progress: { done: number; total: number };
  profiles: ProfileCard[];
  phase: string;
}

function renderAssessment(screen: AssessmentScreen, root: HTMLElement, ctx: ScreenContext): void {
  runAssessment(screen, root, ctx);
}

export function runAssessment(input: AssessmentInput, root: HTMLElement, ctx: ScreenContext): void {
  const queue = [...input.profiles];
  let done = input.progress.done;
  let busy = false;

  const section = el("section", "assessment");
  const header = el("header", "assessment-header");
  header.appendChild(el("p", "instructions", input.task.instructions));
  const counter = el("p", "progress");
  header.appendChild(counter);
  section.appendChild(header);
  const slot = el("div", "card-slot");
  section.appendChild(slot);
  root.appendChild(section);

  const submit = async (decision: 0 | 1): Promise<void> => {
    const profile = queue[0];
    if (!profile || busy) return;
    busy = true;
    slot.querySelectorAll("button").forEach((b) => (b.disabled = true));
    try {
      await ctx.client.submitResponse(ctx.sessionId, profile.profile_id, decision);
      queue.shift();
      done += 1;
      if (queue.length === 0) {
        await ctx.refresh();
        return;
      }
      show();
    } catch (err) {
      errorBanner(root, String(err));
      await ctx.refresh();
      return;
    } finally {
      busy = false;
    }
  };

  const show = (): void => {
    counter.textContent = `${done}/${input.progress.total} answered · ${input.phase.replaceAll("_", " ")}`;
    slot.replaceChildren();
    const profile = queue[0];
    if (!profile) return;
    const card = renderProfileCard(profile, input.task);
    card.querySelectorAll<HTMLButtonElement>("button.decision").forEach((button) => {
      button.addEventListener("click", () => {
        void submit(button.dataset.decision === "1" ? 1 : 0);
      });
    });
    slot.appendChild(card);
  };

  keyHandler = (event: KeyboardEvent) => {
    if (event.key === "1") void submit(1);
    if (event.key === "2") void submit(0);
  };
  document.addEventListener("keydown", keyHandler);
  show();
}

// --- treatment ----------------------------------------------------------------

function decisionLabel(decision: 0 | 1, task: TaskInfo): string {
  return decision === 1 ? task.select_label : task.reject_label;
}

export function renderGuidancePanel(
  view: GuidanceView,
  task: TaskInfo,
): HTMLElement {
  const panel = el("div", "guidance-panel");
  const packet = view.packet;

  const samples = el("div", "teaching-samples");
  for (const sample of packet.samples) {
    const card = el("article", "teaching-card");
    card.dataset.profileId = sample.profile_id;
    const profile = view.sample_profiles[sample.profile_id];
    if (profile) {
      const mini = renderProfileCard(
        { profile_id: sample.profile_id, attributes: profile.attributes, avatar: profile.avatar },
        task,
      );
      mini.querySelector(".decision-buttons")?.remove();
      card.appendChild(mini);
    }
    card.appendChild(
      el(
        "p",
        "teaching-caption",
        `You evaluated this person as ${decisionLabel(sample.student_decision, task)}, ` +
          `but to be fairer, you should evaluate this person as ` +
          `${decisionLabel(sample.teacher_decision, task)}.`,
      ),
    );
    samples.appendChild(card);
  }
  panel.appendChild(samples);

  const charts = el("div", "criteria-charts");
  const studentHighlight = new Set(packet.student_top5.map(([c]) => c));
  const teacherHighlight = new Set(packet.teacher_top5.map(([c]) => c));
  charts.appendChild(
    weightChart("Your criteria", packet.student_top5, studentHighlight, task.select_label),
  );
  charts.appendChild(
    weightChart("Fair model's criteria", packet.teacher_top5, teacherHighlight, task.select_label),
  );
  panel.appendChild(charts);
  return panel;
}

function renderTreatment(screen: TreatmentScreen, root: HTMLElement, ctx: ScreenContext): void {
  const section = el("section", `treatment ${screen.view.kind}`);
  section.appendChild(el("h2", undefined, `Feedback ${screen.view.cycle} of 5`));
  const feedback = el("div", "bias-feedback");
  feedback.appendChild(el("p", "feedback-message", screen.view.message));
  feedback.appendChild(el("p", "feedback-hint", screen.view.hint));
  section.appendChild(feedback);

  if (screen.view.kind === "guidance") {
    section.appendChild(renderGuidancePanel(screen.view, screen.next_block.task));
  }

  const go = el("button", "primary continue", "Continue to the next questions");
  go.addEventListener("click", () => {
    resetKeyboard();
    root.replaceChildren();
    runAssessment(screen.next_block, root, ctx);
  });
  section.appendChild(go);
  root.appendChild(section);
}

// --- check test -----------------------------------------------------------------

function renderCheckTest(screen: CheckTestScreen, root: HTMLElement, ctx: ScreenContext): void {
  const section = el("section", "checktest");
  section.appendChild(el("h2", undefined, "Quick check: reading the charts"));
  const form = el("form", "checktest-form");
  for (const question of screen.questions) {
    const block = el("fieldset", "checktest-question");
    block.appendChild(el("legend", undefined, question.prompt));
    question.options.forEach((option, index) => {
      const label = el("label", "option");
      const radio = el("input");
      radio.type = "radio";
      radio.name = question.id;
      radio.value = String(index);
      label.append(radio, document.createTextNode(" " + option));
      block.appendChild(label);
    });
    form.appendChild(block);
  }
  const submit = el("button", "primary", "Submit answers");
  submit.type = "submit";
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const answers: Record<string, number> = {};
    for (const question of screen.questions) {
      const checked = form.querySelector<HTMLInputElement>(
        `input[name="${question.id}"]:checked`,
      );
      if (!checked) {
        errorBanner(root, "Please answer every question.");
        return;
      }
      answers[question.id] = Number(checked.value);
    }
    submit.disabled = true;
    void ctx.client
      .submitCheckTest(ctx.sessionId, answers)
      .then(async (result) => {
        if (!result.passed) {
          errorBanner(root, "Not quite: please re-read the charts and try again.");
          submit.disabled = false;
          return; // same screen; the server did not advance
        }
        await ctx.refresh();
      })
      .catch((err) => {
        errorBanner(root, String(err));
        submit.disabled = false;
      });
  });
  section.appendChild(form);
  root.appendChild(section);
}

// --- questionnaire ----------------------------------------------------------------

function renderQuestionnaire(
  screen: QuestionnaireScreen,
  root: HTMLElement,
  ctx: ScreenContext,
): void {
  const section = el("section", "questionnaire");
  section.appendChild(
    el("h2", undefined, screen.phase_tag === "pre" ? "Before we continue" : "Final questions"),
  );
  if (!screen.attribute_picker.submitted) {
    section.appendChild(renderAttributePicker(screen, ctx, root));
  }
  if (!screen.questionnaire_submitted) {
    section.appendChild(renderForm(screen, ctx, root));
  }
  root.appendChild(section);
}

function renderAttributePicker(
  screen: QuestionnaireScreen,
  ctx: ScreenContext,
  root: HTMLElement,
): HTMLElement {
  const max = screen.attribute_picker.max;
  const box = el("div", "attribute-picker");
  box.appendChild(
    el("p", undefined,
      `Pick up to ${max} attributes you weighed most when deciding.`),
  );
  const counter = el("p", "picker-counter", `0/${max} selected`);
  const list = el("div", "picker-options");
  const boxes: HTMLInputElement[] = [];
  for (const name of screen.attribute_picker.options) {
    const label = el("label", "option");
    const check = el("input");
    check.type = "checkbox";
    check.value = name;
    boxes.push(check);
    label.append(check, document.createTextNode(" " + name.replaceAll("_", " ")));
    list.appendChild(label);
  }
  const sync = (): void => {
    const picked = boxes.filter((b) => b.checked).length;
    counter.textContent = `${picked}/${max} selected`;
    for (const check of boxes) {
      check.disabled = !check.checked && picked >= max;
    }
  };
  boxes.forEach((b) => b.addEventListener("change", sync));
  const submit = el("button", "primary", "Save selection");
  submit.addEventListener("click", () => {
    const picked = boxes.filter((b) => b.checked).map((b) => b.value);
    if (picked.length === 0) {
      errorBanner(root, "Pick at least one attribute.");
      return;
    }
    submit.disabled = true;
    void ctx.client
      .submitAttributes(ctx.sessionId, screen.phase_tag, picked)
      .then(() => ctx.refresh())
      .catch((err) => {
        errorBanner(root, String(err));
        submit.disabled = false;
      });
  });
  box.append(counter, list, submit);
  return box;
}

function renderForm(
  screen: QuestionnaireScreen,
  ctx: ScreenContext,
  root: HTMLElement,
): HTMLElement {
  const form = el("form", "questionnaire-form");
  for (const item of screen.form) {
    const block = el("fieldset", `form-item kind-${item.kind}`);
    block.dataset.itemId = item.id;
    block.appendChild(el("legend", undefined, item.prompt));
    if (item.kind === "likert5" || item.kind === "likert5_dk") {
      const scale = el("div", "likert");
      scale.appendChild(el("span", "anchor", "Disagree"));
      for (let value = 1; value <= 5; value += 1) {
        const label = el("label", "option");
        const radio = el("input");
        radio.type = "radio";
        radio.name = item.id;
        radio.value = String(value);
        label.append(radio, document.createTextNode(String(value)));
        scale.appendChild(label);
      }
      scale.appendChild(el("span", "anchor", "Agree"));
      if (item.kind === "likert5_dk") {
        const label = el("label", "option dk");
        const radio = el("input");
        radio.type = "radio";
        radio.name = item.id;
        radio.value = "dont_know";
        label.append(radio, document.createTextNode("I don't know"));
        scale.appendChild(label);
      }
      block.appendChild(scale);
    } else if (item.kind === "text") {
      const area = el("textarea");
      area.name = item.id;
      area.rows = 3;
      block.appendChild(area);
    } else {
      const pick = el("select");
      pick.name = item.id;
      pick.appendChild(el("option", undefined, ""));
      for (const option of item.options) {
        const node = el("option", undefined, option);
        node.value = option;
        pick.appendChild(node);
      }
      block.appendChild(pick);
    }
    form.appendChild(block);
  }
  const submit = el("button", "primary", "Submit answers");
  submit.type = "submit";
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const answers: Record<string, unknown> = {};
    for (const item of screen.form) {
      if (item.kind === "likert5" || item.kind === "likert5_dk") {
        const checked = form.querySelector<HTMLInputElement>(
          `input[name="${item.id}"]:checked`,
        );
        if (!checked) {
          errorBanner(root, "Please answer every scale question.");
          return;
        }
        answers[item.id] =
          checked.value === "dont_know" ? "dont_know" : Number(checked.value);
      } else if (item.kind === "text") {
        const area = form.querySelector<HTMLTextAreaElement>(
          `textarea[name="${item.id}"]`,
        );
        answers[item.id] = area?.value ?? "";
      } else {
        const pick = form.querySelector<HTMLSelectElement>(
          `select[name="${item.id}"]`,
        );
        if (!pick || pick.value === "") {
          errorBanner(root, "Please answer every multiple-choice question.");
          return;
        }
        answers[item.id] = pick.value;
      }
    }
    submit.disabled = true;
    void ctx.client
      .submitQuestionnaire(ctx.sessionId, screen.phase_tag, answers)
      .then(() => ctx.refresh())
      .catch((err) => {
        errorBanner(root, String(err));
        submit.disabled = false;
      });
  });
  return form;
}

// --- report ---------------------------------------------------------------------

function fmt(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(3);
}

function renderReport(screen: ReportScreen, root: HTMLElement): void {
  const report: SessionReport = screen.report;
  const section = el("section", "report");
  section.appendChild(el("h2", undefined, "All done - thank you!"));
  const table = el("table", "report-table");
  const rows: Array<[string, string]> = [
    ["Answers given", String(report.n_responses)],
    ["Unfairness before", fmt(report.pre_unfairness)],
    ["Unfairness after", fmt(report.post_unfairness)],
    ["Accuracy before", fmt(report.accuracy_pre)],
    ["Accuracy after", fmt(report.accuracy_post)],
    ["Criteria change rate", fmt(report.key_attribute_change_rate)],
  ];
  for (const [name, value] of rows) {
    const row = el("tr");
    row.appendChild(el("th", undefined, name));
    row.appendChild(el("td", undefined, value));
    table.appendChild(row);
  }
  section.appendChild(table);
  root.appendChild(section);
}
