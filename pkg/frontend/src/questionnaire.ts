// Post-session questionnaire: six forced-choice comparisons between
// the two phosphene render methods plus two learnability yes/no items.
// Keys match the server validator exactly.

export const CHOICE_ITEMS = [
  "overall_preference",
  "object_clarity",
  "visual_comfort",
  "eye_fatigue",
  "mental_effort",
  "visual_appeal",
] as const;

export const BOOL_ITEMS = [
  "gcss_improved_over_time",
  "edges_improved_over_time",
] as const;

export const CHOICE_LABELS: Record<(typeof CHOICE_ITEMS)[number], string> = {
  overall_preference: "Which method did you prefer overall?",
  object_clarity: "Which method showed objects more clearly?",
  visual_comfort: "Which method was more comfortable to look at?",
  eye_fatigue: "Which method was less tiring for your eyes?",
  mental_effort: "Which method required less mental effort?",
  visual_appeal: "Which method was more visually appealing?",
};

export const BOOL_LABELS: Record<(typeof BOOL_ITEMS)[number], string> = {
  gcss_improved_over_time: "Did you get better with GCSS over time?",
  edges_improved_over_time: "Did you get better with Edges over time?",
};

export type Choice = "GCSS" | "Edges";

export type Answers = Record<string, Choice | boolean>;

// Items still unanswered; submission stays blocked until this is empty.
export function missingItems(draft: Partial<Answers>): string[] {
  const missing: string[] = [];
  for (const item of CHOICE_ITEMS) {
    const v = draft[item];
    if (v !== "GCSS" && v !== "Edges") missing.push(item);
  }
  for (const item of BOOL_ITEMS) {
    if (typeof draft[item] !== "boolean") missing.push(item);
  }
  return missing;
}

export function buildAnswers(draft: Partial<Answers>): Answers {
  const missing = missingItems(draft);
  if (missing.length > 0) {
    throw new Error(`unanswered items: ${missing.join(", ")}`);
  }
  const answers: Answers = {};
  for (const item of [...CHOICE_ITEMS, ...BOOL_ITEMS]) {
    answers[item] = draft[item] as Choice | boolean;
  }
  return answers;
}
