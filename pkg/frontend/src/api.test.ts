import { describe, expect, it, vi } from "vitest";

import { ApiError, Client, parseQuestionRef } from "./api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("parseQuestionRef", () => {
  it("accepts plain ids", () => {
    expect(parseQuestionRef("42")).toBe(42);
    expect(parseQuestionRef("  7 ")).toBe(7);
  });

  it("extracts ids from question URLs", () => {
    expect(parseQuestionRef("https://site.example/questions/12345/slug")).toBe(12345);
    expect(parseQuestionRef("/questions/9/how-do-i")).toBe(9);
    expect(parseQuestionRef("/q/31337")).toBe(31337);
  });

  it("rejects everything else", () => {
    expect(parseQuestionRef("")).toBeNull();
    expect(parseQuestionRef("not a url")).toBeNull();
    expect(parseQuestionRef("https://site.example/users/12")).toBeNull();
    expect(parseQuestionRef("12a")).toBeNull();
  });
});

describe("Client", () => {
  it("posts predict payloads and parses verdicts", async () => {
    const fetchFn = vi.fn(async (url: any, init: any) => {
      expect(String(url)).toBe("/v1/predict");
      expect(JSON.parse(init.body)).toEqual({ question_a: 1, question_b: 2 });
      return jsonResponse(200, { harder: 2, confidence: 0.8, cold_start_used: false });
    });
    const client = new Client("", fetchFn as unknown as typeof fetch);
    const verdict = await client.predict(1, 2);
    expect(verdict.harder).toBe(2);
    expect(verdict.confidence).toBeCloseTo(0.8);
    expect(fetchFn).toHaveBeenCalledTimes(1);
  });

  it("posts feedback with the user's label", async () => {
    const fetchFn = vi.fn(async (_url: any, init: any) => {
      expect(JSON.parse(init.body)).toEqual({
        question_a: 1,
        question_b: 2,
        user_says_harder: 1,
      });
      return jsonResponse(200, { accepted: false });
    });
    const client = new Client("", fetchFn as unknown as typeof fetch);
    const result = await client.feedback(1, 2, 1);
    expect(result.accepted).toBe(false);
  });

  it("turns error bodies into ApiError", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(404, { error: "unknown_question", detail: "question 9 unknown" }),
    );
    const client = new Client("", fetchFn as unknown as typeof fetch);
    await expect(client.predict(1, 9)).rejects.toMatchObject({
      status: 404,
      code: "unknown_question",
    });
    await expect(client.predict(1, 9)).rejects.toBeInstanceOf(ApiError);
  });

  it("copes with non-JSON error bodies", async () => {
    const fetchFn = vi.fn(async () => new Response("boom", { status: 500 }));
    const client = new Client("", fetchFn as unknown as typeof fetch);
    await expect(client.health()).rejects.toMatchObject({ code: "http_error" });
  });
});
